//! Shared oracles and fixtures for the integration suites.
//!
//! Everything here deliberately avoids the code paths it is used to
//! check: the scattering oracle solves the barrier numerically with
//! complex transfer matrices over a sliced potential, and the DTW oracle
//! enumerates warping paths explicitly.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use num_complex::Complex64;

/// Transmission through a piecewise-constant potential, computed by
/// chaining complex interface matrices between regions of constant
/// potential. Natural units `hbar = 1`, `2m = 1`, so the local wave
/// number is `k = sqrt(E - V)` (imaginary inside classically forbidden
/// regions).
pub fn transfer_matrix_transmission(energy: f64, slices: &[(f64, f64)]) -> f64 {
    assert!(energy > 0.0, "scattering states need E > 0");
    // Region list: free space, the slices, free space again. Each region
    // uses local coordinates, so the propagation phase of region j is
    // applied when crossing its right edge.
    let mut ks = Vec::with_capacity(slices.len() + 2);
    ks.push(Complex64::new(energy, 0.0).sqrt());
    for &(_, v) in slices {
        ks.push(Complex64::new(energy - v, 0.0).sqrt());
    }
    ks.push(Complex64::new(energy, 0.0).sqrt());
    let mut widths = Vec::with_capacity(slices.len() + 1);
    widths.push(0.0);
    for &(w, _) in slices {
        widths.push(w);
    }

    // M maps (A, B) in the leftmost region to (A, B) in the rightmost.
    let mut m = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    for j in 0..ks.len() - 1 {
        let ratio = ks[j] / ks[j + 1];
        let phase = (Complex64::i() * ks[j] * widths[j]).exp();
        let a = (1.0 + ratio) / 2.0 * phase;
        let b = (1.0 - ratio) / 2.0 / phase;
        let c = (1.0 - ratio) / 2.0 * phase;
        let d = (1.0 + ratio) / 2.0 / phase;
        m = [
            [a * m[0][0] + b * m[1][0], a * m[0][1] + b * m[1][1]],
            [c * m[0][0] + d * m[1][0], c * m[0][1] + d * m[1][1]],
        ];
    }

    // Incoming wave from the left only: (1, r) -> (t, 0).
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let t = det / m[1][1];
    t.norm_sqr()
}

/// The rectangular barrier of height `v0` and dimensionless thickness
/// `s`, cut into several equal slices (the oracle must not depend on the
/// barrier being a single region).
pub fn rectangular_barrier_transmission(energy: f64, v0: f64, s: f64) -> f64 {
    let width = s / v0.sqrt();
    let slices = 7;
    let slice = (width / slices as f64, v0);
    transfer_matrix_transmission(energy, &vec![slice; slices])
}

/// All warping paths from `(0, 0)` to `(n-1, m-1)` with steps
/// `(1,0)`, `(0,1)`, `(1,1)`.
pub fn enumerate_warping_paths(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut paths = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    explore(n, m, &mut stack, &mut paths);
    paths
}

fn explore(
    n: usize,
    m: usize,
    stack: &mut Vec<(usize, usize)>,
    paths: &mut Vec<Vec<(usize, usize)>>,
) {
    let &(i, j) = stack.last().unwrap();
    if i == n - 1 && j == m - 1 {
        paths.push(stack.clone());
        return;
    }
    let steps: [(usize, usize); 3] = [(1, 1), (1, 0), (0, 1)];
    for (di, dj) in steps {
        let (ni, nj) = (i + di, j + dj);
        if ni < n && nj < m {
            stack.push((ni, nj));
            explore(n, m, stack, paths);
            stack.pop();
        }
    }
}

/// Minimal warping cost by explicit path enumeration over precomputed
/// path sets (`paths` must come from [`enumerate_warping_paths`] for the
/// right shape).
pub fn brute_force_dtw(x: &[f64], y: &[f64], paths: &[Vec<(usize, usize)>]) -> f64 {
    let mut best = f64::INFINITY;
    for path in paths {
        let mut cost = 0.0;
        for &(i, j) in path {
            cost += (x[i] - y[j]).abs();
        }
        best = best.min(cost);
    }
    best
}

/// All series of the given length over the alphabet `{0, 0.5, 1}`.
pub fn ternary_series(len: usize) -> Vec<Vec<f64>> {
    let mut series = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(series.len() * 3);
        for prefix in &series {
            for &v in &[0.0, 0.5, 1.0] {
                let mut s = prefix.clone();
                s.push(v);
                next.push(s);
            }
        }
        series = next;
    }
    series
}

/// What the mock entropy service should answer.
pub enum MockBehavior {
    /// Serve words round-robin from this pool.
    Words(Vec<u16>),
    /// Valid JSON of the wrong shape.
    MalformedJson,
    /// Words outside the 16-bit range.
    OutOfRange,
    /// An HTTP error status.
    ServerError,
}

/// A tiny single-threaded HTTP server speaking just enough of the
/// protocol for the entropy client: parses `length=<n>` from the query
/// string and answers `{"data": [...]}`.
pub struct MockQrngServer {
    pub url: String,
    handle: Option<JoinHandle<usize>>,
}

impl MockQrngServer {
    /// Serve up to `requests` requests, then stop. The accept loop polls
    /// with a deadline so an unused server never hangs its test.
    pub fn start(behavior: MockBehavior, requests: usize) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        listener.set_nonblocking(true).unwrap();
        let url = format!("http://{}/api", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut served = 0;
            let mut cursor = 0usize;
            let deadline = std::time::Instant::now() + std::time::Duration::from_secs(30);
            for _ in 0..requests {
                let stream = loop {
                    match listener.accept() {
                        Ok((stream, _)) => break Some(stream),
                        Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            if std::time::Instant::now() > deadline {
                                break None;
                            }
                            std::thread::sleep(std::time::Duration::from_millis(5));
                        }
                        Err(_) => break None,
                    }
                };
                let Some(mut stream) = stream else { break };
                stream.set_nonblocking(false).unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                // Drain headers.
                let mut line = String::new();
                while reader.read_line(&mut line).is_ok() {
                    if line == "\r\n" || line == "\n" || line.is_empty() {
                        break;
                    }
                    line.clear();
                }
                let length = request_line
                    .split(&['?', '&'][..])
                    .find_map(|part| part.strip_prefix("length="))
                    .and_then(|v| v.split_whitespace().next())
                    .and_then(|v| v.split('&').next())
                    .and_then(|v| v.parse::<usize>().ok())
                    .unwrap_or(0);
                let body = match &behavior {
                    MockBehavior::Words(pool) => {
                        let mut data = Vec::with_capacity(length);
                        for _ in 0..length {
                            data.push(pool[cursor % pool.len()].to_string());
                            cursor += 1;
                        }
                        format!("{{\"data\":[{}],\"success\":true}}", data.join(","))
                    }
                    MockBehavior::MalformedJson => "{\"noise\":42}".to_string(),
                    MockBehavior::OutOfRange => {
                        let data: Vec<String> = (0..length).map(|_| "70000".to_string()).collect();
                        format!("{{\"data\":[{}]}}", data.join(","))
                    }
                    MockBehavior::ServerError => String::new(),
                };
                let response = if matches!(behavior, MockBehavior::ServerError) {
                    "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 0\r\n\r\n".to_string()
                } else {
                    format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                        body.len(),
                        body
                    )
                };
                let _ = stream.write_all(response.as_bytes());
                let _ = stream.flush();
                served += 1;
            }
            served
        });
        Self {
            url,
            handle: Some(handle),
        }
    }

    /// Wait for the server thread; returns how many requests it served.
    pub fn finish(mut self) -> usize {
        self.handle.take().map(|h| h.join().unwrap()).unwrap_or(0)
    }
}

impl Drop for MockQrngServer {
    fn drop(&mut self) {
        // The accept loop has its own deadline; just detach.
        drop(self.handle.take());
    }
}

/// Read a whole file as bytes, panicking with the path on failure.
pub fn read_bytes(path: &std::path::Path) -> Vec<u8> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .unwrap_or_else(|e| panic!("open {}: {e}", path.display()))
        .read_to_end(&mut bytes)
        .unwrap();
    bytes
}
