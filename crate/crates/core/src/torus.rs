//! Uniform periodic grids on a rectangular torus, spectral transforms and the
//! vortex background functions.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real sampled field on a [`TorusGrid`]. Entry `[i, j]` is the value at
/// `(i L₁/m₁, j L₂/m₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(pub Array2<f64>);

impl ScalarField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self(Array2::zeros(grid.shape()))
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self(Array2::from_elem(grid.shape(), value))
    }

    pub fn from_fn(grid: &TorusGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let (h1, h2) = (grid.spacing()[0], grid.spacing()[1]);
        Self(Array2::from_shape_fn(grid.shape(), |(i, j)| {
            f(i as f64 * h1, j as f64 * h2)
        }))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.mapv(f))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        Zip::from(&mut self.0)
            .and(&other.0)
            .for_each(|x, &y| *x += a * y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self(&self.0 + c)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        Self(&self.0 - &other.0)
    }
}

/// Uniform grid on `[0,L₁)×[0,L₂)` with cached FFT plans.
#[derive(Clone)]
pub struct TorusGrid {
    periods: [f64; 2],
    resolution: [usize; 2],
    forward: [Arc<dyn Fft<f64>>; 2],
    inverse: [Arc<dyn Fft<f64>>; 2],
    k_squared: Arc<Array2<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("periods", &self.periods)
            .field("resolution", &self.resolution)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.periods == other.periods && self.resolution == other.resolution
    }
}

impl TorusGrid {
    pub fn new(periods: [f64; 2], resolution: [usize; 2]) -> Result<Self> {
        for &l in &periods {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("period {l} must be positive")));
            }
        }
        for &m in &resolution {
            if m < 16 || !m.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "resolution {m} must be a power of two and at least 16"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        let forward = [
            planner.plan_fft_forward(resolution[0]),
            planner.plan_fft_forward(resolution[1]),
        ];
        let inverse = [
            planner.plan_fft_inverse(resolution[0]),
            planner.plan_fft_inverse(resolution[1]),
        ];
        let k_squared = Array2::from_shape_fn((resolution[0], resolution[1]), |(i, j)| {
            let k1 = wavenumber(i, resolution[0], periods[0]);
            let k2 = wavenumber(j, resolution[1], periods[1]);
            k1 * k1 + k2 * k2
        });
        Ok(Self {
            periods,
            resolution,
            forward,
            inverse,
            k_squared: Arc::new(k_squared),
        })
    }

    /// Square grid `m × m` on the torus with the given periods.
    pub fn square(periods: [f64; 2], m: usize) -> Result<Self> {
        Self::new(periods, [m, m])
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.resolution[0], self.resolution[1])
    }

    pub fn len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> f64 {
        self.periods[0] * self.periods[1]
    }

    pub fn spacing(&self) -> [f64; 2] {
        [
            self.periods[0] / self.resolution[0] as f64,
            self.periods[1] / self.resolution[1] as f64,
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    /// `|k|²` for every DFT index, Nyquist modes included.
    pub fn k_squared(&self) -> &Array2<f64> {
        &self.k_squared
    }

    /// Wave vector for DFT index `(i, j)`.
    pub fn wave_vector(&self, i: usize, j: usize) -> [f64; 2] {
        [
            wavenumber(i, self.resolution[0], self.periods[0]),
            wavenumber(j, self.resolution[1], self.periods[1]),
        ]
    }

    /// Unnormalized forward DFT, `F(k) = Σ f(x) e^{-ik·x}`.
    pub fn fft2(&self, f: &ScalarField) -> Array2<Complex64> {
        let data: Vec<Complex64> = f.0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let out = self.transform(data, &self.forward);
        Array2::from_shape_vec(self.shape(), out).expect("shape matches")
    }

    /// Inverse of [`fft2`](Self::fft2), returning the real part.
    pub fn ifft2(&self, spectrum: Array2<Complex64>) -> ScalarField {
        let data: Vec<Complex64> = spectrum.iter().copied().collect();
        let out = self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        ScalarField(
            Array2::from_shape_vec(self.shape(), out.into_iter().map(|c| c.re * scale).collect())
                .expect("shape matches"),
        )
    }

    fn transform(&self, mut data: Vec<Complex64>, plans: &[Arc<dyn Fft<f64>>; 2]) -> Vec<Complex64> {
        let (m1, m2) = self.shape();
        plans[1].process(&mut data);
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        for i in 0..m1 {
            for j in 0..m2 {
                t[j * m1 + i] = data[i * m2 + j];
            }
        }
        plans[0].process(&mut t);
        for i in 0..m1 {
            for j in 0..m2 {
                data[i * m2 + j] = t[j * m1 + i];
            }
        }
        data
    }

    /// Multiplies every Fourier mode by `symbol(|k|²)`.
    pub fn apply_symbol(&self, f: &ScalarField, symbol: impl Fn(f64) -> f64) -> ScalarField {
        let mut spec = self.fft2(f);
        Zip::from(&mut spec)
            .and(&*self.k_squared)
            .for_each(|c, &k2| *c *= symbol(k2));
        self.ifft2(spec)
    }

    /// Rectangle rule `Σ f · area/(m₁m₂)`.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        f.0.sum() * self.cell_area()
    }

    pub fn mean(&self, f: &ScalarField) -> f64 {
        f.0.mean().unwrap_or(0.0)
    }

    /// `∫ f g`.
    pub fn l2_inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        Zip::from(&f.0).and(&g.0).fold(0.0, |acc, &a, &b| acc + a * b) * self.cell_area()
    }

    pub fn mean_zero_project(&self, f: &ScalarField) -> ScalarField {
        f.add_constant(-self.mean(f))
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |k2| -k2)
    }

    /// Mean-zero solution of `Δu = g`.
    pub fn laplacian_inverse_meanzero(&self, g: &ScalarField) -> Result<ScalarField> {
        let mean = self.mean(g);
        if mean.abs() * self.area() > 1e-8 * self.area() * g.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotMeanZero { mean });
        }
        Ok(self.apply_symbol(g, |k2| if k2 == 0.0 { 0.0 } else { -1.0 / k2 }))
    }

    /// `∫ (f g + ∇f·∇g)` evaluated spectrally.
    pub fn h1_inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        let (ff, gg) = (self.fft2(f), self.fft2(g));
        let sum = Zip::from(&ff)
            .and(&gg)
            .and(&*self.k_squared)
            .fold(0.0, |acc, a, b, &k2| acc + (1.0 + k2) * (a * b.conj()).re);
        sum * self.area() / (self.len() as f64).powi(2)
    }

    pub fn h1_norm(&self, f: &ScalarField) -> f64 {
        self.h1_inner(f, f).max(0.0).sqrt()
    }

    /// Dual norm of the functional `φ ↦ ∫ g φ` on `W^{1,2}`.
    pub fn h1_dual_norm(&self, g: &ScalarField) -> f64 {
        let gg = self.fft2(g);
        let sum = Zip::from(&gg)
            .and(&*self.k_squared)
            .fold(0.0, |acc, c, &k2| acc + c.norm_sqr() / (1.0 + k2));
        (sum * self.area() / (self.len() as f64).powi(2)).sqrt()
    }

    /// Periodic minimal-image distance between two points.
    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut d2 = 0.0;
        for k in 0..2 {
            let l = self.periods[k];
            let mut d = (a[k] - b[k]).rem_euclid(l);
            if d > 0.5 * l {
                d = l - d;
            }
            d2 += d * d;
        }
        d2.sqrt()
    }

    /// Minimal-image displacement `x - p`, each coordinate in `[-L/2, L/2)`.
    pub fn displacement(&self, x: [f64; 2], p: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            let l = self.periods[k];
            out[k] = (x[k] - p[k] + 0.5 * l).rem_euclid(l) - 0.5 * l;
        }
        out
    }
}

fn wavenumber(i: usize, m: usize, l: f64) -> f64 {
    let f = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
    let f = if i == m / 2 { -(f.abs()) } else { f };
    2.0 * PI * f / l
}

/// A prescribed zero of one Higgs component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub position: [f64; 2],
    pub multiplicity: u32,
}

/// Vortex points per component, reduced into the fundamental cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VortexSet {
    components: Vec<Vec<Vortex>>,
}

impl VortexSet {
    pub fn new(periods: [f64; 2], components: Vec<Vec<Vortex>>) -> Result<Self> {
        let components: Vec<Vec<Vortex>> = components
            .into_iter()
            .map(|list| {
                list.into_iter()
                    .filter(|v| v.multiplicity > 0)
                    .map(|v| Vortex {
                        position: [
                            v.position[0].rem_euclid(periods[0]),
                            v.position[1].rem_euclid(periods[1]),
                        ],
                        multiplicity: v.multiplicity,
                    })
                    .collect()
            })
            .collect();
        if components.iter().all(|c| c.is_empty()) {
            return Err(Error::ZeroVortexCounts);
        }
        Ok(Self { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &[Vortex] {
        &self.components[j]
    }

    /// Total multiplicity `n_j` per component.
    pub fn counts(&self) -> Vec<u32> {
        self.components
            .iter()
            .map(|c| c.iter().map(|v| v.multiplicity).sum())
            .collect()
    }
}

/// How the Dirac sources are represented on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regularization {
    /// Each point source becomes a unit-mass Gaussian of width `σ`; `None`
    /// selects `σ = 2·max(h₁, h₂)`.
    Gaussian { sigma: Option<f64> },
    /// Keeps the logarithmic singularity: a cut-off free Green's function per
    /// vortex plus a spectrally solved smooth remainder.
    Exact,
}

impl Default for Regularization {
    fn default() -> Self {
        Self::gaussian()
    }
}

impl Regularization {
    pub fn gaussian() -> Self {
        Regularization::Gaussian { sigma: None }
    }
}

/// Default Gaussian width tied to the grid spacing.
pub fn gaussian_width(grid: &TorusGrid) -> f64 {
    let h = grid.spacing();
    2.0 * h[0].max(h[1])
}

/// Floor applied to `u⁰` at sample points sitting on a vortex.
pub const LOG_FLOOR: f64 = -700.0;

/// Mean-zero solution of `Δu⁰ = 4π Σ_s m_s δ_{p_s} − 4π n/|Ω|` for component
/// `j` (0-based), together with `e^{u⁰}`.
pub fn background_function(
    grid: &TorusGrid,
    vortices: &VortexSet,
    j: usize,
    regularization: Regularization,
) -> Result<(ScalarField, ScalarField)> {
    let points = vortices.component(j);
    if points.is_empty() {
        return Ok((ScalarField::zeros(grid), ScalarField::constant(grid, 1.0)));
    }
    warn_if_underresolved(grid, points);
    let u0 = match regularization {
        Regularization::Gaussian { sigma } => {
            gaussian_background(grid, points, sigma.unwrap_or_else(|| gaussian_width(grid)))
        }
        Regularization::Exact => exact_background(grid, points)?,
    };
    let u0 = u0.map(|v| v.max(LOG_FLOOR));
    let expu0 = u0.map(|v| if v <= LOG_FLOOR { 0.0 } else { v.exp() });
    Ok((u0, expu0))
}

fn warn_if_underresolved(grid: &TorusGrid, points: &[Vortex]) {
    let h = grid.spacing();
    let hmax = h[0].max(h[1]);
    for (a, p) in points.iter().enumerate() {
        for q in &points[a + 1..] {
            if grid.distance(p.position, q.position) <= 4.0 * hmax {
                log::warn!(
                    "vortices at {:?} and {:?} are within four grid cells",
                    p.position,
                    q.position
                );
            }
        }
    }
}

/// Fourier transform of the unit-mass Gaussian kernel, `e^{-σ²|k|²/2}`.
pub fn gaussian_kernel_symbol(sigma: f64, k2: f64) -> f64 {
    (-0.5 * sigma * sigma * k2).exp()
}

fn gaussian_background(grid: &TorusGrid, points: &[Vortex], sigma: f64) -> ScalarField {
    let (m1, m2) = grid.shape();
    let area = grid.area();
    let scale = grid.len() as f64;
    let spectrum = Array2::from_shape_fn((m1, m2), |(i, j)| {
        let k = grid.wave_vector(i, j);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let kernel = gaussian_kernel_symbol(sigma, k2);
        let mut sum = Complex64::new(0.0, 0.0);
        for p in points {
            let phase = -(k[0] * p.position[0] + k[1] * p.position[1]);
            sum += Complex64::from_polar(p.multiplicity as f64, phase);
        }
        sum * (-4.0 * PI * kernel * scale / (area * k2))
    });
    grid.ifft2(spectrum)
}

/// Radii of the cut-off annulus used by the exact mode.
fn cutoff_radii(grid: &TorusGrid) -> (f64, f64) {
    let l = grid.periods()[0].min(grid.periods()[1]);
    (0.05 * l, 0.45 * l)
}

/// Smooth step on `[0,1]` with all derivatives vanishing at both ends, and its
/// first two derivatives.
fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let g = 1.0 / t - 1.0 / (1.0 - t);
    let psi = if g > 0.0 {
        let e = (-g).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + g.exp())
    };
    let e = (-g.abs()).exp();
    let bell = e / ((1.0 + e) * (1.0 + e));
    let q = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    let dq = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    let d1 = bell * q;
    let d2 = d1 * (1.0 - 2.0 * psi) * q + bell * dq;
    (psi, d1, d2)
}

/// Cut-off `χ(r)`, equal to one inside `ρ₁` and zero beyond `ρ₂`, with its
/// radial derivatives.
fn cutoff(r: f64, rho1: f64, rho2: f64) -> (f64, f64, f64) {
    let width = rho2 - rho1;
    let (p, d1, d2) = smooth_step((rho2 - r) / width);
    (p, -d1 / width, d2 / (width * width))
}

/// `∫_{ℝ²} 2 ln r χ(r) dx`.
fn cutoff_log_integral(rho1: f64, rho2: f64) -> f64 {
    let inner = 2.0 * PI * rho1 * rho1 * rho1.ln() - PI * rho1 * rho1;
    let outer = adaptive_simpson(
        &|r: f64| 4.0 * PI * r * r.ln() * cutoff(r, rho1, rho2).0,
        rho1,
        rho2,
        1e-14,
        40,
    );
    inner + outer
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

fn exact_background(grid: &TorusGrid, points: &[Vortex]) -> Result<ScalarField> {
    let (rho1, rho2) = cutoff_radii(grid);
    let n: f64 = points.iter().map(|p| p.multiplicity as f64).sum();
    let mut singular = ScalarField::zeros(grid);
    let mut source = ScalarField::constant(grid, -4.0 * PI * n / grid.area());
    let h = grid.spacing();
    for p in points {
        let m = p.multiplicity as f64;
        Zip::indexed(&mut singular.0)
            .and(&mut source.0)
            .for_each(|(i, j), s, g| {
                let d = grid.displacement([i as f64 * h[0], j as f64 * h[1]], p.position);
                let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if r >= rho2 {
                    return;
                }
                if r == 0.0 {
                    *s = f64::NEG_INFINITY;
                    return;
                }
                let (chi, d1, d2) = cutoff(r, rho1, rho2);
                *s += m * 2.0 * r.ln() * chi;
                if r > rho1 {
                    *g -= m * (2.0 * r.ln() * (d2 + d1 / r) + 4.0 * d1 / r);
                }
            });
    }
    let source = grid.mean_zero_project(&source);
    let remainder = grid.laplacian_inverse_meanzero(&source)?;
    let shift = n * cutoff_log_integral(rho1, rho2) / grid.area();
    Ok(singular.add(&remainder).add_constant(-shift))
}

/// A mean-zero trigonometric polynomial with wave numbers `|a|, |b| ≤ modes`
/// and amplitudes decaying like `1/(1 + |a| + |b|)`, scaled to sup norm
/// `amplitude`.
pub fn random_smooth_field(
    grid: &TorusGrid,
    rng: &mut impl Rng,
    amplitude: f64,
    modes: i32,
) -> ScalarField {
    let [l1, l2] = grid.periods();
    let mut terms = Vec::new();
    for a in -modes..=modes {
        for b in 0..=modes {
            if b == 0 && a <= 0 {
                continue;
            }
            let coefficient = rng.random_range(-1.0..1.0) / (1 + a.abs() + b) as f64;
            let phase = rng.random_range(0.0..2.0 * PI);
            terms.push((a as f64, b as f64, coefficient, phase));
        }
    }
    let field = ScalarField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|(a, b, c, p)| c * (2.0 * PI * (a * x / l1 + b * y / l2) + p).cos())
            .sum()
    });
    let field = grid.mean_zero_project(&field);
    let peak = field.max_abs();
    if peak > 0.0 {
        field.scaled(amplitude / peak)
    } else {
        field
    }
}

/// Header line of a field dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub periods: [f64; 2],
    pub resolution: [usize; 2],
    pub component: Option<usize>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Writes a JSON header line followed by `m₁` comma-separated rows.
pub fn write_field_csv(path: &Path, header: &FieldHeader, field: &ScalarField) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    for row in field.0.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<(FieldHeader, ScalarField)> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Config("empty field dump".into()))??;
    let header: FieldHeader = serde_json::from_str(&first)?;
    let [m1, m2] = header.resolution;
    let mut values = Vec::with_capacity(m1 * m2);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            values.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad field value {tok:?}: {e}")))?,
            );
        }
    }
    let arr = Array2::from_shape_vec((m1, m2), values)
        .map_err(|e| Error::Config(format!("field dump shape mismatch: {e}")))?;
    Ok((header, ScalarField(arr)))
}
