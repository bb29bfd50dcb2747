//! Central sections of boxes and parallelepipeds, and the section-dual set.
//!
//! For a box with half-sides `c` and a direction `e`, the central section
//! volume is `vol_d(box) · p(0)`, where `p` is the density of `⟨u, X⟩` for `X`
//! uniform in the box and `u = e/|e|`. That density is a one-dimensional box
//! spline with a closed truncated-power form, so
//!
//! ```text
//! vol_e(box) = |e|₂ · ∏(2c_i) · p_w(0),   w_i = e_i c_i,
//! ```
//!
//! with `p_w` the density of `Σ w_i U_i`, `U_i` uniform on `[−1,1]`. For a
//! parallelepiped `A·box` the section through `e` is the image of the section
//! of the box through `ᵗAe`, which gives
//!
//! ```text
//! vol_e(A·box) = |det A| · |e|₂ · ∏(2c_i) · p_w(0),   w = (ᵗAe) ∘ c.
//! ```
//!
//! Both are rational multiples of `|e|₂` ([`SurdValue`]). Membership of a
//! point `p` in `M^∧` compares `|p|₂` with `2^{1−d} vol_{p/|p|}(M)`; the `|p|₂`
//! factors cancel and the test is a single rational comparison.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{format_rational, int, pi_power, rational_pow, ratio, to_f64, RationalMatrix};
use crate::delta::delta;
use crate::error::{Error, Result};
use crate::linalg::{
    cofactor, determinant, diagonal, identity, inverse, mat_mul, mat_t_vec, mat_vec, scale,
};
use crate::transfer::QualityBudget;

/// `coeff · √norm_sq`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurdValue {
    #[serde(with = "crate::ratio_serde")]
    pub coeff: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub norm_sq: BigRational,
}

impl SurdValue {
    pub fn to_f64(&self) -> f64 {
        to_f64(&self.coeff) * to_f64(&self.norm_sq).sqrt()
    }

    /// The exact square `coeff² · norm_sq`.
    pub fn squared(&self) -> BigRational {
        &self.coeff * &self.coeff * &self.norm_sq
    }
}

impl fmt::Display for SurdValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}·√({}) ≈ {}",
            format_rational(&self.coeff),
            format_rational(&self.norm_sq),
            self.to_f64()
        )
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).map(BigInt::from).product()
}

/// Density at 0 of `Σ w_i U_i` with `U_i` i.i.d. uniform on `[−1,1]`.
///
/// Zero weights are dropped. Needs at least one nonzero weight.
pub fn zero_density(weights: &[BigRational]) -> Result<BigRational> {
    let a: Vec<BigRational> = weights
        .iter()
        .filter(|w| !w.is_zero())
        .map(Signed::abs)
        .collect();
    let r = a.len();
    if r == 0 {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    if r == 1 {
        return Ok(BigRational::one() / (int(2) * &a[0]));
    }
    let mut sum = BigRational::zero();
    for mask in 0u64..(1u64 << r) {
        let mut shift = BigRational::zero();
        let mut negatives = 0;
        for (i, ai) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                shift -= ai;
                negatives += 1;
            } else {
                shift += ai;
            }
        }
        if shift.is_positive() {
            let term = rational_pow(&shift, (r - 1) as i32);
            if negatives % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
    }
    let norm = a.iter().fold(BigRational::one(), |acc, v| acc * int(2) * v)
        * BigRational::from_integer(factorial(r - 1));
    Ok(sum / norm)
}

/// `f64` version of [`zero_density`] with a bound on its rounding error.
fn zero_density_f64(weights: &[f64]) -> (f64, f64) {
    let a: Vec<f64> = weights.iter().filter(|w| **w != 0.0).map(|w| w.abs()).collect();
    let r = a.len();
    if r == 1 {
        return (0.5 / a[0], 1e-15 / a[0]);
    }
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    for mask in 0u64..(1u64 << r) {
        let mut shift = 0.0;
        let mut negatives = 0;
        for (i, ai) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                shift -= ai;
                negatives += 1;
            } else {
                shift += ai;
            }
        }
        if shift > 0.0 {
            let term = shift.powi(r as i32 - 1);
            magnitude += term;
            sum += if negatives % 2 == 0 { term } else { -term };
        }
    }
    let norm: f64 = a.iter().map(|v| 2.0 * v).product::<f64>()
        * (1..r).map(|k| k as f64).product::<f64>();
    (sum / norm, 64.0 * f64::EPSILON * magnitude / norm)
}

fn norm_sq(e: &[BigRational]) -> BigRational {
    e.iter().fold(BigRational::zero(), |acc, v| acc + v * v)
}

fn require_direction(e: &[BigRational], d: usize) -> Result<()> {
    if e.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} coordinates, body lives in dimension {d}",
            e.len()
        )));
    }
    if e.iter().all(Zero::is_zero) {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    Ok(())
}

/// An axis-parallel box `∏ [−c_i, c_i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisBox {
    half_sides: Vec<BigRational>,
}

impl AxisBox {
    pub fn new(half_sides: Vec<BigRational>) -> Result<Self> {
        if half_sides.len() < 2 {
            return Err(Error::InvalidArgument("boxes need dimension ≥ 2".into()));
        }
        if half_sides.iter().any(|c| !c.is_positive()) {
            return Err(Error::InvalidArgument("half-sides must be positive".into()));
        }
        Ok(Self { half_sides })
    }

    pub fn cube(d: usize) -> Result<Self> {
        Self::new(vec![BigRational::one(); d])
    }

    pub fn half_sides(&self) -> &[BigRational] {
        &self.half_sides
    }

    pub fn dim(&self) -> usize {
        self.half_sides.len()
    }

    pub fn volume(&self) -> BigRational {
        self.half_sides
            .iter()
            .fold(BigRational::one(), |acc, c| acc * int(2) * c)
    }

    pub fn contains(&self, z: &[BigRational]) -> bool {
        z.iter().zip(&self.half_sides).all(|(v, c)| v.abs() <= *c)
    }
}

/// Exact central section volume of a box orthogonal to `e`.
pub fn box_section_volume(b: &AxisBox, e: &[BigRational]) -> Result<SurdValue> {
    require_direction(e, b.dim())?;
    let w: Vec<BigRational> = e.iter().zip(b.half_sides()).map(|(x, c)| x * c).collect();
    Ok(SurdValue {
        coeff: b.volume() * zero_density(&w)?,
        norm_sq: norm_sq(e),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl McEstimate {
    /// `|value − exact| ≤ k·σ`, up to float rounding.
    pub fn agrees_with(&self, exact: f64, sigmas: f64) -> bool {
        (self.value - exact).abs() <= sigmas * self.std_err + 1e-12 * exact.abs()
    }
}

const MC_BATCH: u64 = 1 << 16;

/// Monte-Carlo estimate of a box section volume.
///
/// The section is the graph of `x_k = −Σ_{i≠k} e_i x_i / e_k` over the
/// remaining coordinates, where `k` maximises `|e_k| c_k`. Its volume is the
/// area of the admissible region in the other coordinates times the graph's
/// area factor `|e|/|e_k|`, and the admissible fraction of that box is
/// estimated by uniform sampling. Each batch of samples owns its own
/// ChaCha stream, so the result depends only on `seed`.
pub fn box_section_volume_mc(b: &AxisBox, e: &[f64], samples: u64, seed: u64) -> Result<McEstimate> {
    if e.len() != b.dim() {
        return Err(Error::DimensionMismatch("direction/box dimension".into()));
    }
    if e.iter().all(|v| *v == 0.0) || e.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("direction must be finite and nonzero".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let c: Vec<f64> = b.half_sides().iter().map(to_f64).collect();
    let k = (0..c.len())
        .max_by(|&i, &j| (e[i].abs() * c[i]).total_cmp(&(e[j].abs() * c[j])))
        .unwrap();
    let limit = e[k].abs() * c[k];
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    let factor: f64 = (0..c.len())
        .filter(|&i| i != k)
        .map(|i| 2.0 * c[i])
        .product::<f64>()
        * norm
        / e[k].abs();
    let batches = samples.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let n = MC_BATCH.min(samples - batch * MC_BATCH);
            let mut hits = 0u64;
            for _ in 0..n {
                let s: f64 = (0..c.len())
                    .filter(|&i| i != k)
                    .map(|i| e[i] * c[i] * (2.0 * rng.random::<f64>() - 1.0))
                    .sum();
                if s.abs() <= limit {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        value: factor * p,
        std_err: factor * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// `M = basis · box`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parallelepiped {
    shape: AxisBox,
    basis: RationalMatrix,
    det: BigRational,
}

impl Parallelepiped {
    pub fn new(shape: AxisBox, basis: RationalMatrix) -> Result<Self> {
        if basis.rows() != shape.dim() || basis.cols() != shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{}, box has dimension {}",
                basis.rows(),
                basis.cols(),
                shape.dim()
            )));
        }
        let det = determinant(&basis)?;
        if det.is_zero() {
            return Err(Error::InvalidArgument("singular basis".into()));
        }
        Ok(Self { shape, basis, det })
    }

    pub fn from_box(shape: AxisBox) -> Self {
        let d = shape.dim();
        Self::new(shape, identity(d)).expect("identity basis is regular")
    }

    pub fn cube(d: usize) -> Result<Self> {
        Ok(Self::from_box(AxisBox::cube(d)?))
    }

    pub fn shape(&self) -> &AxisBox {
        &self.shape
    }

    pub fn basis(&self) -> &RationalMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn det(&self) -> &BigRational {
        &self.det
    }

    pub fn volume(&self) -> BigRational {
        self.det.abs() * self.shape.volume()
    }

    /// `A·M` for a regular `A`.
    pub fn transformed(&self, a: &RationalMatrix) -> Result<Self> {
        Self::new(self.shape.clone(), mat_mul(a, &self.basis)?)
    }

    pub fn contains(&self, x: &[BigRational]) -> Result<bool> {
        let z = mat_vec(&inverse(&self.basis)?, x);
        Ok(self.shape.contains(&z))
    }

    /// `2^{1−d}` times the rational coefficient `K(u)` of the section volume
    /// through `u`, so that `λu ∈ M^∧` iff `0 ≤ λ ≤ radius_parameter(u)`.
    ///
    /// Homogeneous of degree −1 in `u`.
    pub fn radius_parameter(&self, u: &[BigRational]) -> Result<BigRational> {
        require_direction(u, self.dim())?;
        let section = parallelepiped_section_volume(self, u)?;
        Ok(section.coeff / rational_pow(&int(2), self.dim() as i32 - 1))
    }
}

/// Exact `vol_e(A·box)`.
pub fn parallelepiped_section_volume(m: &Parallelepiped, e: &[BigRational]) -> Result<SurdValue> {
    require_direction(e, m.dim())?;
    let pulled = mat_t_vec(m.basis(), e);
    let w: Vec<BigRational> = pulled
        .iter()
        .zip(m.shape().half_sides())
        .map(|(x, c)| x * c)
        .collect();
    Ok(SurdValue {
        coeff: m.det().abs() * m.shape().volume() * zero_density(&w)?,
        norm_sq: norm_sq(e),
    })
}

/// `2^{1−d} vol_e(M)`: the extent of `M^∧` in direction `e`.
pub fn wedge_radius(m: &Parallelepiped, e: &[BigRational]) -> Result<SurdValue> {
    let v = parallelepiped_section_volume(m, e)?;
    Ok(SurdValue {
        coeff: v.coeff / rational_pow(&int(2), m.dim() as i32 - 1),
        norm_sq: v.norm_sq,
    })
}

/// Exact membership test for the section-dual set `M^∧`.
///
/// Membership is first decided in `f64` with an error bound and falls back
/// to exact arithmetic when the level is too close to 1.
pub struct SectionDual {
    body: Parallelepiped,
    scale: BigRational,
    scale_f64: f64,
}

impl SectionDual {
    pub fn new(body: &Parallelepiped) -> Self {
        let d = body.dim();
        let scale =
            body.det().abs() * body.shape().volume() / rational_pow(&int(2), d as i32 - 1);
        Self {
            scale_f64: to_f64(&scale),
            scale,
            body: body.clone(),
        }
    }

    pub fn body(&self) -> &Parallelepiped {
        &self.body
    }

    fn weights(&self, p: &[BigRational]) -> Vec<BigRational> {
        mat_t_vec(self.body.basis(), p)
            .iter()
            .zip(self.body.shape().half_sides())
            .map(|(x, c)| x * c)
            .collect()
    }

    /// `r(p) = 2^{1−d} K(p)`; `p ∈ M^∧` iff `r(p) ≥ 1` (or `p = 0`).
    pub fn level(&self, p: &[BigRational]) -> Result<BigRational> {
        Ok(&self.scale * zero_density(&self.weights(p))?)
    }

    pub fn contains(&self, p: &[BigRational]) -> bool {
        if p.iter().all(Zero::is_zero) {
            return true;
        }
        let w = self.weights(p);
        if let Some(inside) = self.fast_contains(&w) {
            return inside;
        }
        &self.scale * zero_density(&w).expect("nonzero point") >= BigRational::one()
    }

    /// Float decision on exact weights. The density at 0 is non-increasing in
    /// each `|w_i|`, so rounding the weights by a relative `δ` moves it by at
    /// most a factor `1/(1 ± δ)`; the `1e−12` relative margin covers that.
    fn fast_contains(&self, w: &[BigRational]) -> Option<bool> {
        if w.len() > 6 {
            return None;
        }
        let wf: Vec<f64> = w.iter().map(to_f64).collect();
        if wf.iter().all(|v| *v == 0.0) || wf.iter().any(|v| !v.is_normal() && *v != 0.0) {
            return None;
        }
        if wf.iter().zip(w).any(|(f, e)| (*f == 0.0) != e.is_zero()) {
            return None;
        }
        let (density, err) = zero_density_f64(&wf);
        let level = self.scale_f64 * density;
        let guard = self.scale_f64 * err + 1e-12 * level.abs();
        ((level - 1.0).abs() > guard).then_some(level > 1.0)
    }

    pub fn contains_int(&self, p: &[i64]) -> bool {
        let exact: Vec<BigRational> = p.iter().map(|&v| int(v)).collect();
        self.contains(&exact)
    }
}

/// Visits every integer point of the box `∏[−b_i, b_i]` in lexicographic order
/// until `visit` returns `true`. Returns whether it stopped early.
fn scan_integer_box(bounds: &[i64], mut visit: impl FnMut(&[i64]) -> bool) -> bool {
    let d = bounds.len();
    let mut p: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        if visit(&p) {
            return true;
        }
        let mut k = d;
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            if p[k] < bounds[k] {
                p[k] += 1;
                for (j, v) in p.iter_mut().enumerate().skip(k + 1) {
                    *v = -bounds[j];
                }
                break;
            }
        }
    }
}

fn floor_i64(r: &BigRational) -> Result<i64> {
    r.floor()
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::Inconclusive("enumeration box too large".into()))
}

const MAX_BOX_POINTS: f64 = 5e7;

fn box_points(bounds: &[i64]) -> f64 {
    bounds.iter().map(|b| (2 * b + 1) as f64).product()
}

/// Axis-aligned bounding box of `M`, as integer half-widths.
pub fn integer_bounds(m: &Parallelepiped) -> Result<Vec<i64>> {
    let d = m.dim();
    (0..d)
        .map(|k| {
            let w = (0..d).fold(BigRational::zero(), |acc, i| {
                acc + m.basis().get(k, i).abs() * &m.shape().half_sides()[i]
            });
            floor_i64(&w)
        })
        .collect()
}

/// Axis-aligned bounding box of `M^∧`, as integer half-widths.
///
/// The density `p_w(0)` never exceeds `1/(2 max|w_i|)`, so every `p ∈ M^∧`
/// has `|(ᵗAp)_i| c_i ≤ |det A| ∏c` for all `i`; mapping that box back by
/// `ᵗA^{−1}` bounds `p`.
pub fn section_dual_integer_bounds(m: &Parallelepiped) -> Result<Vec<i64>> {
    let d = m.dim();
    let c = m.shape().half_sides();
    let prod = c.iter().fold(BigRational::one(), |acc, v| acc * v);
    let h: Vec<BigRational> = c.iter().map(|ci| m.det().abs() * &prod / ci).collect();
    let inv_t = inverse(m.basis())?.transpose();
    (0..d)
        .map(|k| {
            let w = (0..d).fold(BigRational::zero(), |acc, i| acc + inv_t.get(k, i).abs() * &h[i]);
            floor_i64(&w)
        })
        .collect()
}

fn find_nonzero_point(bounds: &[i64], mut member: impl FnMut(&[i64]) -> bool) -> Option<Vec<i64>> {
    let mut found = None;
    scan_integer_box(bounds, |p| {
        if p.iter().any(|&v| v != 0) && member(p) {
            found = Some(p.to_vec());
            true
        } else {
            false
        }
    });
    found
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct WedgeLemmaReport {
    pub d: usize,
    /// `M^∧` has a nonzero integer point ⇒ so does `M`.
    pub property_i: bool,
    /// `M^∧` is convex along sampled chords.
    pub property_ii: bool,
    /// `(AM)^∧ = A'(M^∧)` on sampled points.
    pub property_iii: bool,
    /// `Δ_d B^d_∞ ⊂ (B^d_∞)^∧` on sampled points.
    pub property_iv: bool,
    /// `M` had no nonzero integer point, so the whole box of `M^∧` was scanned.
    pub exhaustive_dual_scan: bool,
    pub lattice_points_scanned: u64,
    pub chords_checked: u64,
    pub cofactor_samples: u64,
    pub cube_samples: u64,
    pub counterexample: Option<String>,
}

impl WedgeLemmaReport {
    pub fn all_pass(&self) -> bool {
        self.property_i && self.property_ii && self.property_iii && self.property_iv
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<BigRational> {
    loop {
        let u: Vec<i64> = (0..d).map(|_| rng.random_range(-6..=6)).collect();
        if u.iter().any(|&v| v != 0) {
            return u.into_iter().map(int).collect();
        }
    }
}

fn random_regular_matrix(rng: &mut ChaCha8Rng, d: usize, spread: i64) -> RationalMatrix {
    loop {
        let entries = (0..d * d)
            .map(|_| int(rng.random_range(-spread..=spread)))
            .collect();
        let a = RationalMatrix::new(d, d, entries).expect("square");
        if !determinant(&a).expect("square").is_zero() {
            return a;
        }
    }
}

/// A random parallelepiped with a small integer basis and half-sides in
/// `(0, 1]`, sized so that a fair share of them miss every nonzero lattice point.
pub fn random_parallelepiped(rng: &mut ChaCha8Rng, d: usize) -> Parallelepiped {
    let basis = random_regular_matrix(rng, d, 2);
    let half_sides = (0..d).map(|_| ratio(rng.random_range(1..=16), 16)).collect();
    Parallelepiped::new(AxisBox::new(half_sides).expect("positive"), basis).expect("regular")
}

fn scaled(v: &[BigRational], s: &BigRational) -> Vec<BigRational> {
    v.iter().map(|x| x * s).collect()
}

/// Checks the four section-dual properties on `M` (and on the cube of the
/// same dimension for property (iv)), using `trials` samples per sampled
/// property. Property (i) is decided by exhaustive lattice enumeration.
pub fn check_wedge_lemma(m: &Parallelepiped, trials: usize, seed: u64) -> Result<WedgeLemmaReport> {
    let d = m.dim();
    if !(2..=6).contains(&d) {
        return Err(Error::InvalidArgument(format!(
            "lemma checks run for 2 ≤ d ≤ 6, got {d}"
        )));
    }
    let dual = SectionDual::new(m);
    let mut report = WedgeLemmaReport {
        d,
        property_i: true,
        property_ii: true,
        property_iii: true,
        property_iv: true,
        ..Default::default()
    };

    // (i)
    let m_bounds = integer_bounds(m)?;
    let inverse_basis = inverse(m.basis())?;
    let in_m = |p: &[i64]| {
        let x: Vec<BigRational> = p.iter().map(|&v| int(v)).collect();
        m.shape().contains(&mat_vec(&inverse_basis, &x))
    };
    if find_nonzero_point(&m_bounds, in_m).is_none() {
        let bounds = section_dual_integer_bounds(m)?;
        if box_points(&bounds) > MAX_BOX_POINTS {
            return Err(Error::Inconclusive(format!(
                "section-dual bounding box {bounds:?} is too large to enumerate"
            )));
        }
        report.exhaustive_dual_scan = true;
        report.lattice_points_scanned = box_points(&bounds) as u64;
        if let Some(p) = find_nonzero_point(&bounds, |p| dual.contains_int(p)) {
            report.property_i = false;
            report.counterexample = Some(format!(
                "(i): {p:?} lies in M^∧ but M has no nonzero integer point"
            ));
        }
    }

    let mut rng = rng_for(seed, 0);

    // (ii)
    for _ in 0..trials {
        let endpoint = |rng: &mut ChaCha8Rng| -> Result<Vec<BigRational>> {
            let u = random_direction(rng, d);
            let s = if rng.random_bool(0.5) {
                BigRational::one()
            } else {
                ratio(rng.random_range(0..=32), 32)
            };
            Ok(scaled(&u, &(s * m.radius_parameter(&u)?)))
        };
        let p = endpoint(&mut rng)?;
        let q = endpoint(&mut rng)?;
        for j in 1..8 {
            let t = ratio(j, 8);
            let point: Vec<BigRational> = p
                .iter()
                .zip(&q)
                .map(|(a, b)| (BigRational::one() - &t) * a + &t * b)
                .collect();
            report.chords_checked += 1;
            if !dual.contains(&point) {
                report.property_ii = false;
                report.counterexample.get_or_insert_with(|| {
                    format!("(ii): chord point {} of M^∧ falls outside", show(&point))
                });
            }
        }
    }

    // (iii)
    for _ in 0..trials {
        let a = random_regular_matrix(&mut rng, d, 3);
        let am = m.transformed(&a)?;
        let am_dual = SectionDual::new(&am);
        let det_a = determinant(&a)?;
        let back = scale(&a.transpose(), &(BigRational::one() / det_a));
        for _ in 0..4 {
            let u = random_direction(&mut rng, d);
            let s = if rng.random_bool(0.25) {
                BigRational::one()
            } else {
                ratio(rng.random_range(1..=16), 8)
            };
            let q = scaled(&u, &(&s * am.radius_parameter(&u)?));
            let lhs = am_dual.contains(&q);
            let rhs = dual.contains(&mat_vec(&back, &q));
            report.cofactor_samples += 1;
            if lhs != rhs || lhs != (s <= BigRational::one()) {
                report.property_iii = false;
                report.counterexample.get_or_insert_with(|| {
                    format!("(iii): membership of {} disagrees", show(&q))
                });
            }
        }
    }

    // (iv)
    let cube_dual = SectionDual::new(&Parallelepiped::cube(d)?);
    let delta_d = delta(d)?;
    let steps = 16i64;
    for t in 0..trials {
        let p: Vec<BigRational> = if t == 0 || rng.random_bool(0.25) {
            (0..d)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        delta_d.clone()
                    } else {
                        -delta_d.clone()
                    }
                })
                .collect()
        } else {
            (0..d)
                .map(|_| &delta_d * ratio(rng.random_range(-steps..=steps), steps))
                .collect()
        };
        report.cube_samples += 1;
        if !cube_dual.contains(&p) {
            report.property_iv = false;
            report.counterexample.get_or_insert_with(|| {
                format!("(iv): {} in Δ_d·cube is outside the section-dual", show(&p))
            });
        }
    }

    Ok(report)
}

fn show(p: &[BigRational]) -> String {
    let parts: Vec<String> = p.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaSuiteReport {
    pub d: usize,
    pub seed: u64,
    pub samples_per_body: usize,
    pub cube: WedgeLemmaReport,
    pub parallelepipeds: usize,
    pub failures_i: usize,
    pub failures_ii: usize,
    pub failures_iii: usize,
    pub failures_iv: usize,
    /// Bodies for which `M` had no nonzero lattice point and `M^∧` was scanned.
    pub exhaustive_dual_scans: usize,
    pub counterexamples: Vec<String>,
    pub all_pass: bool,
}

/// The cube plus `bodies` random parallelepipeds, each checked with
/// [`check_wedge_lemma`]. Body `k` draws from stream `k + 1` of `seed`, so the
/// report does not depend on how rayon schedules the work.
pub fn verify_lemmas(d: usize, bodies: usize, samples_per_body: usize, seed: u64) -> Result<LemmaSuiteReport> {
    let cube = check_wedge_lemma(&Parallelepiped::cube(d)?, samples_per_body, seed)?;
    let reports = (0..bodies)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64 + 1);
            let m = random_parallelepiped(&mut rng, d);
            check_wedge_lemma(&m, samples_per_body, seed.wrapping_add(k as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |f: fn(&WedgeLemmaReport) -> bool| reports.iter().filter(|r| !f(r)).count();
    let failures_i = count(|r| r.property_i);
    let failures_ii = count(|r| r.property_ii);
    let failures_iii = count(|r| r.property_iii);
    let failures_iv = count(|r| r.property_iv);
    let counterexamples: Vec<String> = std::iter::once(&cube)
        .chain(&reports)
        .filter_map(|r| r.counterexample.clone())
        .collect();
    Ok(LemmaSuiteReport {
        d,
        seed,
        samples_per_body,
        all_pass: cube.all_pass() && counterexamples.is_empty(),
        exhaustive_dual_scans: reports.iter().filter(|r| r.exhaustive_dual_scan).count(),
        cube,
        parallelepipeds: bodies,
        failures_i,
        failures_ii,
        failures_iii,
        failures_iv,
        counterexamples,
    })
}

/// `(λ, μ) ∈ R_+^{m+n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleSpec {
    #[serde(with = "crate::ratio_serde::vec")]
    pub lambda: Vec<BigRational>,
    #[serde(with = "crate::ratio_serde::vec")]
    pub mu: Vec<BigRational>,
}

impl TupleSpec {
    pub fn new(lambda: Vec<BigRational>, mu: Vec<BigRational>) -> Result<Self> {
        if lambda.is_empty() || mu.is_empty() {
            return Err(Error::InvalidArgument("λ and μ must be nonempty".into()));
        }
        if lambda.iter().chain(&mu).any(|v| !v.is_positive()) {
            return Err(Error::InvalidArgument("tuple entries must be positive".into()));
        }
        Ok(Self { lambda, mu })
    }

    /// `∏λ · ∏μ`.
    pub fn product(&self) -> BigRational {
        pi_power(&self.lambda) * pi_power(&self.mu)
    }

    pub fn scaled(&self, s: &BigRational) -> Self {
        Self {
            lambda: scaled(&self.lambda, s),
            mu: scaled(&self.mu, s),
        }
    }

    fn concat(&self) -> Vec<BigRational> {
        self.lambda.iter().chain(&self.mu).cloned().collect()
    }
}

/// `λ'_j = P/λ_j`, `μ'_i = P/μ_i` with `P = ∏λ·∏μ`: the diagonal of the
/// cofactor of `diag(λ, μ)^{−1}` up to the common scaling.
pub fn dual_tuple(t: &TupleSpec) -> TupleSpec {
    let p = t.product();
    TupleSpec {
        lambda: t.lambda.iter().map(|l| &p / l).collect(),
        mu: t.mu.iter().map(|u| &p / u).collect(),
    }
}

fn check_tuple_shape(theta: &RationalMatrix, t: &TupleSpec) -> Result<()> {
    if t.lambda.len() != theta.cols() || t.mu.len() != theta.rows() {
        return Err(Error::DimensionMismatch(format!(
            "tuple has |λ| = {}, |μ| = {} for a {}x{} matrix",
            t.lambda.len(),
            t.mu.len(),
            theta.rows(),
            theta.cols()
        )));
    }
    Ok(())
}

/// `T = [[E_m, 0], [−Θ, E_n]]`.
pub fn primal_basis(theta: &RationalMatrix) -> RationalMatrix {
    let (n, m) = (theta.rows(), theta.cols());
    let d = n + m;
    let mut rows = identity(d).to_rows();
    for i in 0..n {
        for j in 0..m {
            rows[m + i][j] = -theta.get(i, j).clone();
        }
    }
    RationalMatrix::from_rows(rows).expect("square")
}

/// `T' = [[E_m, ᵗΘ], [0, E_n]]`.
pub fn dual_basis(theta: &RationalMatrix) -> RationalMatrix {
    let (n, m) = (theta.rows(), theta.cols());
    let d = n + m;
    let mut rows = identity(d).to_rows();
    for i in 0..n {
        for j in 0..m {
            rows[j][m + i] = theta.get(i, j).clone();
        }
    }
    RationalMatrix::from_rows(rows).expect("square")
}

/// `M_{λ,μ} = {z : |z_j| ≤ λ_j, |(Θz_x + z_y)_i| ≤ μ_i} = T · box(λ, μ)`.
pub fn primal_parallelepiped(theta: &RationalMatrix, t: &TupleSpec) -> Result<Parallelepiped> {
    check_tuple_shape(theta, t)?;
    Parallelepiped::new(AxisBox::new(t.concat())?, primal_basis(theta))
}

/// `M̂_{λ,μ} = {z : |(z_x − ᵗΘz_y)_j| ≤ λ_j, |z_{m+i}| ≤ μ_i} = T' · box(λ, μ)`.
pub fn transposed_parallelepiped(theta: &RationalMatrix, t: &TupleSpec) -> Result<Parallelepiped> {
    check_tuple_shape(theta, t)?;
    Parallelepiped::new(AxisBox::new(t.concat())?, dual_basis(theta))
}

/// Checks `M_{Δλ', Δμ'} ⊂ (M̂_{λ,μ})^∧` on every vertex of the left side.
/// Since `M^∧` of a convex body is convex, the vertices decide the inclusion.
pub fn check_tuple_inclusion(theta: &RationalMatrix, t: &TupleSpec) -> Result<bool> {
    let d = theta.d();
    let delta_d = delta(d)?;
    let inner = primal_parallelepiped(theta, &dual_tuple(t).scaled(&delta_d))?;
    let outer = SectionDual::new(&transposed_parallelepiped(theta, t)?);
    let c = inner.shape().half_sides().to_vec();
    for mask in 0u32..(1u32 << d) {
        let corner: Vec<BigRational> = c
            .iter()
            .enumerate()
            .map(|(i, ci)| if mask >> i & 1 == 1 { -ci.clone() } else { ci.clone() })
            .collect();
        if !outer.contains(&mat_vec(inner.basis(), &corner)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceBijectionReport {
    /// `(Δ_d λ', Δ_d μ')`.
    pub image: TupleSpec,
    /// `∏ Δ_d λ'_j = X^m`.
    pub lambda_product_ok: bool,
    /// `∏ Δ_d μ'_i = U^n`.
    pub mu_product_ok: bool,
    /// `min Δ_d λ'_j ≥ 1`.
    pub lambda_lower_ok: bool,
    /// `max Δ_d μ'_i ≤ Δ_d V^m Y^n`, in power form.
    pub mu_upper_ok: bool,
}

impl SurfaceBijectionReport {
    pub fn all_ok(&self) -> bool {
        self.lambda_product_ok && self.mu_product_ok && self.lambda_lower_ok && self.mu_upper_ok
    }
}

/// Maps a tuple on the transposed-side surface
/// (`∏λ = V^m`, `∏μ = Y^n`, `max λ ≤ Δ_d V^m Y^n`, `min μ ≥ 1`) to
/// `(Δ_d λ', Δ_d μ')` and checks, exactly, that it lies on the primal-side
/// surface of the same budget. Every equality is tested in power form
/// against the budget's comparators.
pub fn check_surface_bijection(
    theta: &RationalMatrix,
    t: &TupleSpec,
    budget: &QualityBudget,
) -> Result<SurfaceBijectionReport> {
    check_tuple_shape(theta, t)?;
    if budget.m() != theta.cols() || budget.n() != theta.rows() {
        return Err(Error::DimensionMismatch("budget does not match Θ".into()));
    }
    let e = budget.exponent() as i32;
    let ypow = budget
        .ypow_cmp()
        .ok_or_else(|| Error::HypothesisViolated("budget has an unbounded Y".into()))?;
    let prod_l = pi_power(&t.lambda);
    let prod_m = pi_power(&t.mu);
    let max_l = t.lambda.iter().max().expect("nonempty");
    let min_m = t.mu.iter().min().expect("nonempty");
    if rational_pow(&prod_l, e) != *budget.vpow_cmp()
        || rational_pow(&prod_m, e) != *ypow
        || rational_pow(max_l, e) > *budget.suppow_cmp()
        || *min_m < BigRational::one()
    {
        return Err(Error::HypothesisViolated(
            "tuple is not on the transposed-side surface of the budget".into(),
        ));
    }
    let image = dual_tuple(t).scaled(budget.delta());
    let max_mu = image.mu.iter().max().expect("nonempty");
    Ok(SurfaceBijectionReport {
        lambda_product_ok: pi_power(&image.lambda) == *budget.xpow(),
        mu_product_ok: pi_power(&image.mu) == *budget.upow(),
        lambda_lower_ok: image.lambda.iter().all(|l| *l >= BigRational::one()),
        mu_upper_ok: rational_pow(max_mu, e) <= *budget.suppow_cmp(),
        image,
    })
}

/// `diag(values)` as a parallelepiped basis, for scaled cubes.
pub fn diagonal_parallelepiped(shape: AxisBox, diag: &[BigRational]) -> Result<Parallelepiped> {
    Parallelepiped::new(shape, diagonal(diag))
}

/// The cofactor matrix, re-exported for the lemma checks' callers.
pub fn cofactor_matrix(a: &RationalMatrix) -> Result<RationalMatrix> {
    cofactor(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(items: &[i64]) -> Vec<BigRational> {
        items.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn zero_density_examples() {
        assert_eq!(zero_density(&q(&[1])).unwrap(), ratio(1, 2));
        assert_eq!(zero_density(&q(&[1, 1])).unwrap(), ratio(1, 2));
        assert_eq!(zero_density(&q(&[1, 0, 1])).unwrap(), ratio(1, 2));
        // Δ_d = 2 p(0) for the all-ones weights.
        assert_eq!(int(2) * zero_density(&q(&[1, 1, 1])).unwrap(), ratio(3, 4));
        assert_eq!(int(2) * zero_density(&q(&[1, 1, 1, 1, 1])).unwrap(), ratio(115, 192));
        assert!(zero_density(&q(&[0, 0])).is_err());
    }

    #[test]
    fn float_density_tracks_exact() {
        let w = [ratio(3, 7), ratio(-2, 5), ratio(1, 9), int(1)];
        let exact = to_f64(&zero_density(&w).unwrap());
        let (approx, err) = zero_density_f64(&w.iter().map(to_f64).collect::<Vec<_>>());
        assert!((approx - exact).abs() <= err.max(1e-15));
    }

    #[test]
    fn square_sections() {
        let sq = AxisBox::cube(2).unwrap();
        let axis = box_section_volume(&sq, &q(&[1, 0])).unwrap();
        assert_eq!(axis.coeff, int(2));
        assert_eq!(axis.to_f64(), 2.0);
        let diag = box_section_volume(&sq, &q(&[1, 1])).unwrap();
        assert_eq!(diag.squared(), int(8));
        assert!((diag.to_f64() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_hexagon_section() {
        let cube = AxisBox::cube(3).unwrap();
        let v = box_section_volume(&cube, &q(&[1, 1, 1])).unwrap();
        // (3√3)² = 27; also Δ_3 · 2² · √3.
        assert_eq!(v.squared(), int(27));
        let via_delta = delta(3).unwrap() * int(4);
        assert_eq!(v.squared(), &via_delta * &via_delta * int(3));
    }

    #[test]
    fn direction_scale_does_not_matter() {
        let b = AxisBox::new(vec![ratio(1, 2), int(2), ratio(3, 4)]).unwrap();
        let a = box_section_volume(&b, &q(&[1, -2, 3])).unwrap();
        let c = box_section_volume(&b, &q(&[-5, 10, -15])).unwrap();
        assert_eq!(a.squared(), c.squared());
    }

    #[test]
    fn zero_direction_is_rejected() {
        let cube = AxisBox::cube(2).unwrap();
        assert!(box_section_volume(&cube, &q(&[0, 0])).is_err());
        assert!(box_section_volume_mc(&cube, &[0.0, 0.0], 10, 0).is_err());
        assert!(wedge_radius(&Parallelepiped::cube(2).unwrap(), &q(&[0, 0])).is_err());
        assert!(AxisBox::new(vec![int(1), int(0)]).is_err());
    }

    #[test]
    fn parallelepiped_identity_and_scaling() {
        let b = AxisBox::new(vec![int(1), ratio(1, 3), int(2)]).unwrap();
        let e = q(&[2, -1, 1]);
        let plain = box_section_volume(&b, &e).unwrap();
        let via = parallelepiped_section_volume(&Parallelepiped::from_box(b), &e).unwrap();
        assert_eq!(plain, via);

        let cube = AxisBox::cube(3).unwrap();
        let doubled = Parallelepiped::new(cube, scale(&identity(3), &int(2))).unwrap();
        let v = parallelepiped_section_volume(&doubled, &q(&[1, 1, 1])).unwrap();
        // 4 · 3√3, squared.
        assert_eq!(v.squared(), int(16 * 27));
        assert!(Parallelepiped::new(AxisBox::cube(2).unwrap(), RationalMatrix::parse(&[&["1", "2"], &["2", "4"]]).unwrap()).is_err());
    }

    #[test]
    fn wedge_radius_examples() {
        let sq = Parallelepiped::cube(2).unwrap();
        let r = wedge_radius(&sq, &q(&[1, 1])).unwrap();
        assert_eq!(r.squared(), int(2));
        let r = wedge_radius(&sq, &q(&[1, 0])).unwrap();
        assert_eq!(r.squared(), int(1));
        let cube = Parallelepiped::cube(3).unwrap();
        let r = wedge_radius(&cube, &q(&[1, 1, 1])).unwrap();
        // ((3√3)/4)² = 27/16
        assert_eq!(r.squared(), ratio(27, 16));
        assert!((r.to_f64() - 1.299).abs() < 1e-3);
    }

    #[test]
    fn square_corner_is_on_the_boundary_of_its_dual() {
        let dual = SectionDual::new(&Parallelepiped::cube(2).unwrap());
        assert_eq!(dual.level(&q(&[1, 1])).unwrap(), int(1));
        assert!(dual.contains(&q(&[1, 1])));
        assert!(!dual.contains(&[ratio(101, 100), int(1)]));
        assert!(dual.contains_int(&[1, 1]));
        assert!(!dual.contains_int(&[1, 2]));
    }

    #[test]
    fn cofactor_transport_for_diagonal_map() {
        let m = Parallelepiped::cube(2).unwrap();
        let a = diagonal(&[int(2), ratio(1, 2)]);
        let am = m.transformed(&a).unwrap();
        let a_cof = cofactor_matrix(&a).unwrap();
        assert_eq!(a_cof, diagonal(&[ratio(1, 2), int(2)]));
        let am_dual = SectionDual::new(&am);
        let m_dual = SectionDual::new(&m);
        let back = inverse(&a_cof).unwrap();
        for u in [[1, 0], [0, 1], [1, 1], [3, -2], [1, 5]] {
            let u = q(&u);
            let r = am.radius_parameter(&u).unwrap();
            for s in [ratio(1, 2), int(1), ratio(9, 8)] {
                let p = scaled(&u, &(&r * &s));
                assert_eq!(am_dual.contains(&p), m_dual.contains(&mat_vec(&back, &p)));
            }
        }
    }

    #[test]
    fn lemma_checks_on_cubes() {
        for d in [2, 3] {
            let report = check_wedge_lemma(&Parallelepiped::cube(d).unwrap(), 200, 7).unwrap();
            assert!(report.all_pass(), "{report:?}");
        }
        assert!(check_wedge_lemma(&Parallelepiped::cube(7).unwrap(), 1, 0).is_err());
    }

    #[test]
    fn empty_parallelepiped_gets_an_exhaustive_scan() {
        let m = Parallelepiped::from_box(AxisBox::new(vec![ratio(1, 2), ratio(1, 3)]).unwrap());
        let report = check_wedge_lemma(&m, 20, 1).unwrap();
        assert!(report.exhaustive_dual_scan);
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn integer_box_scan_visits_everything_in_order() {
        let mut seen = Vec::new();
        scan_integer_box(&[1, 0], |p| {
            seen.push(p.to_vec());
            false
        });
        assert_eq!(seen, vec![vec![-1, 0], vec![0, 0], vec![1, 0]]);
    }

    #[test]
    fn dual_tuple_examples() {
        let t = TupleSpec::new(vec![int(7)], vec![int(11)]).unwrap();
        let dt = dual_tuple(&t);
        assert_eq!(dt.lambda, q(&[11]));
        assert_eq!(dt.mu, q(&[7]));

        let t = TupleSpec::new(q(&[2, 3]), q(&[5])).unwrap();
        let dt = dual_tuple(&t);
        assert_eq!(dt.lambda, q(&[15, 10]));
        assert_eq!(dt.mu, q(&[6]));
        assert!(TupleSpec::new(q(&[1, -1]), q(&[1])).is_err());
    }

    #[test]
    fn tuple_parallelepipeds_use_the_dual_bases() {
        let theta = RationalMatrix::parse(&[&["1/2", "1/3"]]).unwrap();
        let t = TupleSpec::new(q(&[1, 2]), vec![ratio(1, 3)]).unwrap();
        let primal = primal_parallelepiped(&theta, &t).unwrap();
        // (x, −y) ∈ M iff |x_j| ≤ λ_j and |Θx − y| ≤ μ.
        assert!(primal.contains(&[int(1), int(2), ratio(-4, 3)]).unwrap());
        assert!(!primal.contains(&[int(1), int(2), int(0)]).unwrap());
        let tb = mat_mul(&primal_basis(&theta), &dual_basis(&theta).transpose()).unwrap();
        assert_eq!(tb, identity(3));
        assert!(check_tuple_inclusion(&theta, &t).unwrap());
    }
}
