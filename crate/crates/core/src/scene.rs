//! Object phantoms and the unfolded two-photon imaging geometry.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MODULE: &str = "scene";

/// Default reconstruction grid: the central 32×64 crop of the pattern area.
pub const DEFAULT_ROWS: usize = 32;
pub const DEFAULT_COLS: usize = 64;
/// Image-plane pixel pitch along the slit-separation axis, μm.
pub const DEFAULT_PITCH_X_UM: f64 = 164.16;
pub const DEFAULT_PITCH_Y_UM: f64 = 109.44;
/// Magnification measured from the reconstructed slit separation.
pub const MEASURED_BETA: f64 = 2.56;
/// Magnification predicted by the lens geometry.
pub const THEORETICAL_BETA: f64 = 2.54;
pub const DEFAULT_FOCAL_MM: f64 = 250.0;
pub const SLIT_WIDTH_UM: f64 = 200.0;
pub const SLIT_SEPARATION_UM: f64 = 800.0;

/// Discretized object transmission `T_n ∈ [0, 1]` on the reconstruction grid,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    pitch_x_um: f64,
    pitch_y_um: f64,
}

impl<T: Real> Phantom<T> {
    pub fn new(
        rows: usize,
        cols: usize,
        values: Vec<T>,
        pitch_x_um: f64,
        pitch_y_um: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                MODULE,
                "rows/cols",
                "grid must be non-empty",
            ));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(
                MODULE,
                "values",
                format!("{} values for a {rows}x{cols} grid", values.len()),
            ));
        }
        if let Some(i) = values
            .iter()
            .position(|&v| !(v >= T::zero() && v <= T::one()))
        {
            return Err(Error::invalid(
                MODULE,
                "values",
                format!("value at {i} outside [0, 1]"),
            ));
        }
        if !(pitch_x_um > 0.0 && pitch_y_um > 0.0) {
            return Err(Error::invalid(
                MODULE,
                "pitch",
                "pixel pitch must be positive",
            ));
        }
        Ok(Self {
            rows,
            cols,
            values,
            pitch_x_um,
            pitch_y_um,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of pixels `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn pitch_x_um(&self) -> f64 {
        self.pitch_x_um
    }

    pub fn pitch_y_um(&self) -> f64 {
        self.pitch_y_um
    }

    pub fn total_transmission(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Column sums, i.e. the transmission profile across the slits.
    pub fn column_profile(&self) -> Vec<T> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Embeds this phantom at the center of a larger opaque grid.
    pub fn padded(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::invalid(
                MODULE,
                "pattern_grid",
                "padded grid smaller than the phantom",
            ));
        }
        let (r0, c0) = crop_origin(rows, cols, self.rows, self.cols);
        let mut values = vec![T::zero(); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                values[(r0 + i) * cols + c0 + j] = self.get(i, j);
            }
        }
        Self::new(rows, cols, values, self.pitch_x_um, self.pitch_y_um)
    }

    /// ASCII PGM (P2) with maxval 65535. Pixel pitches travel in a comment line.
    pub fn to_pgm(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P2");
        let _ = writeln!(out, "# pitch_um {} {}", self.pitch_x_um, self.pitch_y_um);
        let _ = writeln!(out, "{} {}", self.cols, self.rows);
        let _ = writeln!(out, "65535");
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|j| {
                    let v = (self.get(i, j).as_f64() * 65535.0).round() as u32;
                    v.to_string()
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses a P2 image, mapping gray level `g` to `g / maxval`.
    ///
    /// Missing pitch metadata falls back to the default grid pitches.
    pub fn from_pgm(text: &str) -> Result<Self> {
        let mut pitch = (DEFAULT_PITCH_X_UM, DEFAULT_PITCH_Y_UM);
        let mut tokens = Vec::new();
        for line in text.lines() {
            let (body, comment) = match line.find('#') {
                Some(p) => (&line[..p], Some(&line[p + 1..])),
                None => (line, None),
            };
            if let Some(c) = comment {
                let mut it = c.split_whitespace();
                if it.next() == Some("pitch_um") {
                    let px = it.next().and_then(|v| v.parse().ok());
                    let py = it.next().and_then(|v| v.parse().ok());
                    if let (Some(px), Some(py)) = (px, py) {
                        pitch = (px, py);
                    }
                }
            }
            tokens.extend(body.split_whitespace());
        }
        let bad = |reason: &str| Error::format("pgm", reason);
        let mut it = tokens.into_iter();
        if it.next() != Some("P2") {
            return Err(bad("missing P2 magic"));
        }
        let mut num = |what: &str| -> Result<u64> {
            it.next()
                .ok_or_else(|| bad(&format!("truncated before {what}")))?
                .parse::<u64>()
                .map_err(|e| bad(&format!("{what}: {e}")))
        };
        let cols = num("width")? as usize;
        let rows = num("height")? as usize;
        let maxval = num("maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maxval out of range"));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let g = num("pixel")?;
            if g > maxval {
                return Err(bad("pixel exceeds maxval"));
            }
            values.push(T::lit(g as f64 / maxval as f64));
        }
        Self::new(rows, cols, values, pitch.0, pitch.1)
    }
}

/// Top-left corner of a centered `inner` crop inside an `outer` grid.
pub fn crop_origin(
    outer_rows: usize,
    outer_cols: usize,
    inner_rows: usize,
    inner_cols: usize,
) -> (usize, usize) {
    ((outer_rows - inner_rows) / 2, (outer_cols - inner_cols) / 2)
}

/// Thin-lens geometry of the unfolded imaging path (distances in mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsGeometry {
    /// Focal length of the imaging lens.
    pub f: f64,
    /// Lens to object.
    pub d3: f64,
    /// Crystal to modulator plus crystal to lens.
    pub d12: f64,
}

impl OpticsGeometry {
    pub fn magnification(&self) -> f64 {
        self.d12 / self.d3
    }

    /// `1/d12 + 1/d3 − 1/f`, in mm⁻¹.
    pub fn lens_residual(&self) -> f64 {
        1.0 / self.d12 + 1.0 / self.d3 - 1.0 / self.f
    }
}

/// Solves the thin-lens equation together with `d12 / d3 = beta`.
pub fn solve_geometry(f: f64, beta: f64) -> Result<OpticsGeometry> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            "f",
            format!("focal length must be positive, got {f}"),
        ));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            "beta",
            format!("magnification must be positive, got {beta}"),
        ));
    }
    let d3 = f * (1.0 + beta) / beta;
    Ok(OpticsGeometry {
        f,
        d3,
        d12: beta * d3,
    })
}

/// Double-slit geometry in object-plane units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSlit {
    pub rows: usize,
    pub cols: usize,
    pub pitch_x_um: f64,
    pub pitch_y_um: f64,
    pub slit_width_um: f64,
    pub separation_um: f64,
    pub beta: f64,
}

impl Default for DoubleSlit {
    fn default() -> Self {
        Self {
            rows: DEFAULT_ROWS,
            cols: DEFAULT_COLS,
            pitch_x_um: DEFAULT_PITCH_X_UM,
            pitch_y_um: DEFAULT_PITCH_Y_UM,
            slit_width_um: SLIT_WIDTH_UM,
            separation_um: SLIT_SEPARATION_UM,
            beta: MEASURED_BETA,
        }
    }
}

impl DoubleSlit {
    /// Slit width on the reconstruction grid, in pixels.
    pub fn width_px(&self) -> f64 {
        self.slit_width_um * self.beta / self.pitch_x_um
    }

    /// Center-to-center separation on the reconstruction grid, in pixels.
    pub fn separation_px(&self) -> f64 {
        self.separation_um * self.beta / self.pitch_x_um
    }

    /// Column-coordinate intervals `[lo, hi)` of the two slits.
    pub fn slit_intervals(&self) -> [(f64, f64); 2] {
        let center = self.cols as f64 / 2.0;
        let (w, s) = (self.width_px(), self.separation_px());
        let left = center - s / 2.0;
        let right = center + s / 2.0;
        [
            (left - w / 2.0, left + w / 2.0),
            (right - w / 2.0, right + w / 2.0),
        ]
    }

    pub fn render<T: Real>(&self) -> Result<Phantom<T>> {
        make_double_slit(
            self.rows,
            self.cols,
            self.pitch_x_um,
            self.pitch_y_um,
            self.slit_width_um,
            self.separation_um,
            self.beta,
        )
    }
}

/// Two vertical transmissive bands on an opaque background, centered on the
/// grid. Partially covered columns get their covered area fraction.
pub fn make_double_slit<T: Real>(
    rows: usize,
    cols: usize,
    pitch_x_um: f64,
    pitch_y_um: f64,
    slit_width_um: f64,
    separation_um: f64,
    beta: f64,
) -> Result<Phantom<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(
            MODULE,
            "rows/cols",
            "grid must be non-empty",
        ));
    }
    if !(pitch_x_um > 0.0 && pitch_y_um > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "pitch",
            "pixel pitch must be positive",
        ));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "beta",
            "magnification must be positive",
        ));
    }
    if !(slit_width_um > 0.0) || !(separation_um >= 0.0) {
        return Err(Error::invalid(
            MODULE,
            "slit",
            "width must be positive and separation non-negative",
        ));
    }
    let geom = DoubleSlit {
        rows,
        cols,
        pitch_x_um,
        pitch_y_um,
        slit_width_um,
        separation_um,
        beta,
    };
    let intervals = geom.slit_intervals();
    let eps = 1e-9;
    for &(lo, hi) in &intervals {
        if lo < -eps || hi > cols as f64 + eps {
            return Err(Error::invalid(
                MODULE,
                "slit",
                format!(
                    "slits span columns [{:.3}, {:.3}) beyond the {cols}-column grid",
                    intervals[0].0, intervals[1].1
                ),
            ));
        }
    }
    let covered = union_intervals(&intervals);
    let profile: Vec<f64> = (0..cols)
        .map(|j| {
            let (a, b) = (j as f64, j as f64 + 1.0);
            let cover: f64 = covered
                .iter()
                .map(|&(lo, hi)| (hi.min(b) - lo.max(a)).max(0.0))
                .sum();
            cover.clamp(0.0, 1.0)
        })
        .collect();
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        values.extend(profile.iter().map(|&v| T::lit(v)));
    }
    Phantom::new(rows, cols, values, pitch_x_um, pitch_y_um)
}

fn union_intervals(iv: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted = iv.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in sorted {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Transmission-weighted center of each slit along the column axis,
/// measured from the rendered phantom.
pub fn slit_centroids<T: Real>(phantom: &Phantom<T>) -> Option<(f64, f64)> {
    let profile: Vec<f64> = phantom
        .column_profile()
        .iter()
        .map(|v| v.as_f64())
        .collect();
    let half = phantom.cols() / 2;
    let centroid = |range: std::ops::Range<usize>| {
        let (mut m0, mut m1) = (0.0, 0.0);
        for j in range {
            m0 += profile[j];
            m1 += profile[j] * (j as f64 + 0.5);
        }
        (m0 > 0.0).then(|| m1 / m0)
    };
    Some((centroid(0..half)?, centroid(half..phantom.cols())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_slit() -> Phantom<f64> {
        DoubleSlit::default().render().unwrap()
    }

    #[test]
    fn geometry_at_theoretical_magnification() {
        let g = solve_geometry(250.0, 2.54).unwrap();
        assert!((g.d3 - 348.425_196_850_393_7).abs() < 1e-9);
        assert!((g.d12 - 885.0).abs() < 1e-9);
        assert!(g.lens_residual().abs() < 1e-9);
        assert!(((g.magnification() - 2.54) / 2.54).abs() < 1e-12);
    }

    #[test]
    fn geometry_unit_magnification_is_2f_2f() {
        let g = solve_geometry(250.0, 1.0).unwrap();
        assert_eq!(g.d3, 500.0);
        assert_eq!(g.d12, 500.0);
    }

    #[test]
    fn geometry_rejects_degenerate_inputs() {
        assert!(solve_geometry(250.0, 0.0).is_err());
        assert!(solve_geometry(0.0, 2.54).is_err());
        assert!(solve_geometry(-1.0, 2.54).is_err());
    }

    #[test]
    fn slit_separation_and_width_in_pixels() {
        let g = DoubleSlit::default();
        assert!((g.separation_px() - 12.475).abs() < 1e-3);
        assert!((g.width_px() - 512.0 / 164.16).abs() < 1e-12);
        let (l, r) = slit_centroids(&default_slit()).unwrap();
        assert!((r - l - 12.48).abs() < 0.05, "separation {}", r - l);
    }

    #[test]
    fn one_slit_column_weights_sum_to_its_width() {
        let p = default_slit();
        let profile = p.column_profile();
        let one_slit: f64 = profile[..32].iter().sum::<f64>() / p.rows() as f64;
        assert!((one_slit - 512.0 / 164.16).abs() < 1e-12);
        // 3 full columns plus fractional edges
        let full = profile[..32]
            .iter()
            .filter(|&&v| (v / 32.0 - 1.0).abs() < 1e-12)
            .count();
        let partial = profile[..32]
            .iter()
            .filter(|&&v| v > 0.0 && (v / 32.0) < 1.0 - 1e-12)
            .count();
        assert_eq!(full, 2);
        assert_eq!(partial, 2);
    }

    #[test]
    fn total_transmission_matches_analytic_area() {
        let p = default_slit();
        let g = DoubleSlit::default();
        let analytic = 2.0 * (g.slit_width_um * g.beta) * (32.0 * g.pitch_y_um)
            / (g.pitch_x_um * g.pitch_y_um);
        assert!(((p.total_transmission() - analytic) / analytic).abs() < 1e-9);
    }

    #[test]
    fn full_width_slit_is_all_ones() {
        // width covering all 64 columns, both slits centered
        let width = 64.0 * 164.16 / 2.56;
        let p: Phantom<f64> = make_double_slit(32, 64, 164.16, 109.44, width, 0.0, 2.56).unwrap();
        assert!(p.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn slit_exceeding_grid_is_rejected() {
        let r = make_double_slit::<f64>(32, 64, 164.16, 109.44, 200.0, 5000.0, 2.56);
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn mirror_symmetric_for_even_pixel_separation() {
        // separation of exactly 12 pixels
        let sep = 12.0 * 164.16 / 2.56;
        let p: Phantom<f64> = make_double_slit(8, 64, 164.16, 109.44, 200.0, sep, 2.56).unwrap();
        for i in 0..p.rows() {
            for j in 0..p.cols() {
                assert!((p.get(i, j) - p.get(i, p.cols() - 1 - j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let p = default_slit();
        let text = p.to_pgm();
        assert!(text.starts_with("P2\n"));
        let q: Phantom<f64> = Phantom::from_pgm(&text).unwrap();
        assert_eq!((q.rows(), q.cols()), (32, 64));
        assert_eq!(q.pitch_x_um(), 164.16);
        for (a, b) in p.values().iter().zip(q.values()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn padding_centers_the_crop() {
        let p = default_slit();
        let big = p.padded(64, 128).unwrap();
        assert_eq!(big.len(), 8192);
        assert!((big.total_transmission() - p.total_transmission()).abs() < 1e-9);
        assert_eq!(big.get(16, 32 + 25), p.get(0, 25));
    }
}
