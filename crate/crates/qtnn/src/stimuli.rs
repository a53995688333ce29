//! Raster stimuli for the bistable-perception experiments, plus plain-text
//! image I/O (PGM P2 and CSV rasters).
//!
//! Two canonical sets are generated procedurally and deterministically:
//!
//! * the 10x10 cube: a wireframe drawn from two offset squares joined by
//!   diagonals, with training variants shading either the front face
//!   (class 0) or the rear face (class 1), and the bare wireframe as the
//!   ambiguous input;
//! * the 20x20 figure-ground vase: a mirrored profile curve; one training
//!   variant fills the two lateral regions (class 0), the other fills the
//!   central region (class 1), and the bare profile curve is the
//!   ambiguous input.
//!
//! The exact pixel coordinates are fixed by this module and mirrored by
//! golden files under `tests/golden/`; anything consuming the sets may
//! rely on wireframe pixels being a subset of every variant.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Role of a stimulus inside its set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StimulusTag {
    NeckerFrontShaded,
    NeckerRearShaded,
    NeckerAmbiguous,
    RubinFacesShaded,
    RubinVaseShaded,
    RubinContour,
    Custom,
}

impl StimulusTag {
    pub fn name(&self) -> &'static str {
        match self {
            StimulusTag::NeckerFrontShaded => "necker-front-shaded",
            StimulusTag::NeckerRearShaded => "necker-rear-shaded",
            StimulusTag::NeckerAmbiguous => "necker-ambiguous",
            StimulusTag::RubinFacesShaded => "rubin-faces-shaded",
            StimulusTag::RubinVaseShaded => "rubin-vase-shaded",
            StimulusTag::RubinContour => "rubin-contour",
            StimulusTag::Custom => "custom",
        }
    }
}

impl fmt::Display for StimulusTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StimulusTag {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Ok(match text.trim() {
            "necker-front-shaded" => StimulusTag::NeckerFrontShaded,
            "necker-rear-shaded" => StimulusTag::NeckerRearShaded,
            "necker-ambiguous" => StimulusTag::NeckerAmbiguous,
            "rubin-faces-shaded" => StimulusTag::RubinFacesShaded,
            "rubin-vase-shaded" => StimulusTag::RubinVaseShaded,
            "rubin-contour" => StimulusTag::RubinContour,
            _ => StimulusTag::Custom,
        })
    }
}

/// A rectangular grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    tag: StimulusTag,
}

impl Stimulus {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, tag: StimulusTag) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(
                "stimulus dimensions must be positive".into(),
            ));
        }
        if pixels.len() != width * height {
            return Err(Error::Validation(format!(
                "{}x{} stimulus needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        for &p in &pixels {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!(
                    "pixel intensity {p} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
            tag,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tag(&self) -> StimulusTag {
        self.tag
    }

    /// Row-major pixel intensities; this is also the network input vector.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Number of pixels with non-zero intensity.
    pub fn lit_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p > 0.0).count()
    }

    /// True when every lit pixel of `other` is lit here too.
    pub fn covers(&self, other: &Stimulus) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(mine, theirs)| *theirs == 0.0 || *mine > 0.0)
    }
}

/// The three stimuli of one experiment: two labelled training images and
/// the ambiguous probe.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSet {
    /// Training image for class 0.
    pub class0: Stimulus,
    /// Training image for class 1.
    pub class1: Stimulus,
    /// The ambiguous image shown after training.
    pub ambiguous: Stimulus,
}

impl StimulusSet {
    /// Swap the class labels of the two training images (the alternative
    /// labelling for the figure-ground set).
    pub fn swapped(self) -> Self {
        Self {
            class0: self.class1,
            class1: self.class0,
            ambiguous: self.ambiguous,
        }
    }
}

struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    fn lit(&mut self, row: usize, col: usize) {
        self.pixels[row * self.width + col] = 1.0;
    }

    fn outline(&mut self, top: usize, left: usize, bottom: usize, right: usize) {
        for c in left..=right {
            self.lit(top, c);
            self.lit(bottom, c);
        }
        for r in top..=bottom {
            self.lit(r, left);
            self.lit(r, right);
        }
    }

    fn fill(&mut self, top: usize, left: usize, bottom: usize, right: usize) {
        for r in top..=bottom {
            for c in left..=right {
                self.lit(r, c);
            }
        }
    }

    fn into_stimulus(self, tag: StimulusTag) -> Stimulus {
        Stimulus::new(self.width, self.height, self.pixels, tag).expect("generator invariants")
    }
}

/// 10x10 cube wireframe: front square outline over rows 3..=9 and columns
/// 0..=6, rear square outline over rows 0..=6 and columns 3..=9, and four
/// diagonal connectors between corresponding corners.
fn cube_wireframe() -> Canvas {
    let mut canvas = Canvas::new(10, 10);
    canvas.outline(3, 0, 9, 6);
    canvas.outline(0, 3, 6, 9);
    for (row, col) in [(0usize, 3usize), (0, 9), (6, 3), (6, 9)] {
        for k in 1..3 {
            canvas.lit(row + k, col - k);
        }
    }
    canvas
}

/// The cube set: front-face interior (rows 4..=8, columns 1..=5) shaded
/// for class 0, rear-face interior (rows 1..=5, columns 4..=8) shaded for
/// class 1, bare wireframe as the ambiguous probe.
pub fn necker_set() -> StimulusSet {
    let mut front = cube_wireframe();
    front.fill(4, 1, 8, 5);
    let mut rear = cube_wireframe();
    rear.fill(1, 4, 5, 8);
    StimulusSet {
        class0: front.into_stimulus(StimulusTag::NeckerFrontShaded),
        class1: rear.into_stimulus(StimulusTag::NeckerRearShaded),
        ambiguous: cube_wireframe().into_stimulus(StimulusTag::NeckerAmbiguous),
    }
}

/// Left-boundary column of the vase profile per row; the right boundary
/// mirrors it. Larger values narrow the vase.
const VASE_PROFILE: [usize; 20] = [2, 2, 3, 4, 5, 6, 7, 8, 8, 8, 8, 8, 7, 6, 7, 8, 7, 5, 3, 2];

/// The figure-ground set: both training images share one mirrored profile
/// curve; class 0 fills the two lateral (face) regions, class 1 fills the
/// central (vase) region, and the bare curve is the ambiguous probe.
pub fn rubin_set() -> StimulusSet {
    let n = 20;
    let mut faces = Canvas::new(n, n);
    let mut vase = Canvas::new(n, n);
    let mut contour = Canvas::new(n, n);
    for (row, &lb) in VASE_PROFILE.iter().enumerate() {
        let rb = n - 1 - lb;
        for canvas in [&mut faces, &mut vase, &mut contour] {
            canvas.lit(row, lb);
            canvas.lit(row, rb);
        }
        for col in 0..lb {
            faces.lit(row, col);
        }
        for col in rb + 1..n {
            faces.lit(row, col);
        }
        for col in lb + 1..rb {
            vase.lit(row, col);
        }
    }
    StimulusSet {
        class0: faces.into_stimulus(StimulusTag::RubinFacesShaded),
        class1: vase.into_stimulus(StimulusTag::RubinVaseShaded),
        ambiguous: contour.into_stimulus(StimulusTag::RubinContour),
    }
}

/// Write a stimulus as plain-text PGM (P2, maxval 255). The tag survives
/// in a `# tag:` comment; binary intensities round-trip exactly.
pub fn save_pgm<W: std::io::Write>(mut out: W, stimulus: &Stimulus) -> std::io::Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "# tag: {}", stimulus.tag())?;
    writeln!(out, "{} {}", stimulus.width(), stimulus.height())?;
    writeln!(out, "255")?;
    for row in 0..stimulus.height() {
        let line: Vec<String> = (0..stimulus.width())
            .map(|col| ((stimulus.get(row, col) * 255.0).round() as u32).to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Parse a plain-text PGM (P2). Intensity is `value / maxval`.
pub fn load_pgm(text: &str) -> Result<Stimulus> {
    let mut tag = StimulusTag::Custom;
    let mut tokens: Vec<(usize, usize, &str)> = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("tag:") {
                tag = name.trim().parse()?;
            }
            continue;
        }
        let mut col = 1;
        for token in line.split_whitespace() {
            // Column of the token start, 1-based.
            let offset = line[col - 1..].find(token).map(|p| p + col).unwrap_or(col);
            tokens.push((line_idx + 1, offset, token));
            col = offset + token.len();
        }
    }
    let mut iter = tokens.into_iter();
    let (line, col, magic) = iter
        .next()
        .ok_or_else(|| Error::parse(1, 1, "empty PGM file"))?;
    if magic != "P2" {
        return Err(Error::parse(
            line,
            col,
            format!("expected magic 'P2', found '{magic}'"),
        ));
    }
    let mut header = |what: &str| -> Result<usize> {
        let (line, col, token) = iter
            .next()
            .ok_or_else(|| Error::parse(1, 1, format!("missing {what}")))?;
        token
            .parse::<usize>()
            .map_err(|_| Error::parse(line, col, format!("invalid {what} '{token}'")))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Validation("PGM dimensions must be positive".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Validation(format!(
            "PGM maxval {maxval} outside 1..=65535"
        )));
    }
    let mut pixels = Vec::with_capacity(width * height);
    let mut last_line = 1;
    for (line, col, token) in iter.by_ref() {
        last_line = line;
        if pixels.len() == width * height {
            return Err(Error::parse(line, col, "trailing pixel data"));
        }
        let value: u32 = token
            .parse()
            .map_err(|_| Error::parse(line, col, format!("invalid pixel value '{token}'")))?;
        if value as usize > maxval {
            return Err(Error::parse(
                line,
                col,
                format!("pixel value {value} exceeds maxval {maxval}"),
            ));
        }
        pixels.push(value as f64 / maxval as f64);
    }
    if pixels.len() != width * height {
        return Err(Error::parse(
            last_line,
            1,
            format!(
                "raster declares {}x{} = {} pixels but contains {}",
                width,
                height,
                width * height,
                pixels.len()
            ),
        ));
    }
    Stimulus::new(width, height, pixels, tag)
}

/// Write a stimulus as a CSV raster: one row per line, 17-significant-digit
/// floats. Round-trips any stimulus exactly, at the cost of the tag.
pub fn save_csv<W: std::io::Write>(mut out: W, stimulus: &Stimulus) -> std::io::Result<()> {
    for row in 0..stimulus.height() {
        let line: Vec<String> = (0..stimulus.width())
            .map(|col| crate::fmt_f64(stimulus.get(row, col)))
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parse a CSV raster. The width is fixed by the first row.
pub fn load_csv(text: &str) -> Result<Stimulus> {
    let mut width = None;
    let mut pixels = Vec::new();
    let mut height = 0;
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        height += 1;
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::parse(
                    line_idx + 1,
                    1,
                    format!("row has {} values, expected {w}", fields.len()),
                ));
            }
            _ => {}
        }
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::parse(
                    line_idx + 1,
                    col + 1,
                    format!("invalid intensity '{field}'"),
                )
            })?;
            pixels.push(value);
        }
    }
    let width = width.ok_or_else(|| Error::parse(1, 1, "empty CSV raster"))?;
    Stimulus::new(width, height, pixels, StimulusTag::Custom)
}

/// Save a stimulus, choosing the format from the file extension
/// (`.pgm` or `.csv`).
pub fn save_stimulus(stimulus: &Stimulus, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    match extension(path)?.as_str() {
        "pgm" => save_pgm(&mut writer, stimulus)?,
        "csv" => save_csv(&mut writer, stimulus)?,
        other => {
            return Err(Error::Usage(format!(
                "unsupported stimulus format '.{other}' (expected .pgm or .csv)"
            )))
        }
    }
    use std::io::Write;
    writer.flush()?;
    Ok(())
}

/// Load a stimulus, choosing the format from the file extension.
pub fn load_stimulus(path: &Path) -> Result<Stimulus> {
    let text = std::fs::read_to_string(path)?;
    match extension(path)?.as_str() {
        "pgm" => load_pgm(&text),
        "csv" => load_csv(&text),
        other => Err(Error::Usage(format!(
            "unsupported stimulus format '.{other}' (expected .pgm or .csv)"
        ))),
    }
}

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::Usage(format!("{} has no file extension", path.display())))
}
