//! The canonical stimulus rasters are pinned by golden files: the
//! generators must reproduce them byte for byte. A diff here means the
//! pixel art changed, which invalidates recorded experiment outputs.

use qtnn::stimuli::{necker_set, rubin_set, save_pgm, Stimulus};

fn pgm_bytes(stimulus: &Stimulus) -> String {
    let mut buf = Vec::new();
    save_pgm(&mut buf, stimulus).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn necker_rasters_match_golden_files() {
    let set = necker_set();
    assert_eq!(
        pgm_bytes(&set.class0),
        include_str!("golden/necker_front_shaded.pgm")
    );
    assert_eq!(
        pgm_bytes(&set.class1),
        include_str!("golden/necker_rear_shaded.pgm")
    );
    assert_eq!(
        pgm_bytes(&set.ambiguous),
        include_str!("golden/necker_ambiguous.pgm")
    );
}

#[test]
fn rubin_rasters_match_golden_files() {
    let set = rubin_set();
    assert_eq!(
        pgm_bytes(&set.class0),
        include_str!("golden/rubin_faces_shaded.pgm")
    );
    assert_eq!(
        pgm_bytes(&set.class1),
        include_str!("golden/rubin_vase_shaded.pgm")
    );
    assert_eq!(
        pgm_bytes(&set.ambiguous),
        include_str!("golden/rubin_contour.pgm")
    );
}
