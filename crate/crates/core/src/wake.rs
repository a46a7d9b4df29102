//! Kelvin wake of a moving vessel from thin-ship (Michell) theory.
//!
//! The hull is a parabolic strut of length `L`, beam `B` and draft `D`
//! moving at the Froude speed `U = Fr·√(gL)`. Linearized steady flow with
//! a free surface turns the hull into a centerplane source sheet whose
//! far-field free waves live on the dispersion curve `α² = k₀κ` (ship-frame
//! stationarity), with `k₀ = g/U²`, `α` the along-track and `τ` the
//! transverse wavenumber, and `κ = √(α² + τ²)` the total wavenumber. The
//! velocity potential astern reduces to the one-dimensional spectral
//! integral
//!
//! ```text
//! φ(x,y,z) = −(16BL/π) · U · Fr⁶ · ∫₀^∞ C(τ,x,z) cos(τy) dτ
//! C(τ,x,z) = 2 s(α) (1 − e^{−κD}) cos(αx) e^{κz} / (a³(2a² − 1))
//! ```
//!
//! where `a = α/k₀` solves `a² = (1 + √(1 + 4(τ/k₀)²))/2 ≥ 1`, the hull
//! shape enters through `s(u) = sin(u) − u·cos(u)` at `u = αL/2` (the
//! Fourier transform of the parabolic section's longitudinal slope), and
//! the draft through the depth-integrated decay `(1 − e^{−κD})`. The
//! denominator never vanishes (`a ≥ 1`), so the integrand is smooth; it
//! decays like `τ^{−2}` and oscillates with phase `αx + τy`, which drives
//! the panel sizes of the adaptive quadrature below.
//!
//! The surface elevation is `Z = (U/g) ∂φ/∂x`, differentiated under the
//! integral sign; slopes come from one more derivative. Grid evaluation is
//! band-limited to the wavenumbers the facet spacing can represent
//! (κ ≤ π/h), which keeps unresolvable ripples from aliasing; pointwise
//! potential evaluation instead integrates until the envelope falls below
//! 10⁻⁸ of its peak. Everything is evaluated in the ship frame (`x` along
//! the track, positive ahead; the wake occupies `x < 0`) and rotated by the
//! heading onto the scene grid via a separable tensor evaluation plus
//! bilinear interpolation.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quadrature::{GL8_NODES, GL8_WEIGHTS};
use crate::sea_surface::SeaSurfaceRealization;

const GRAVITY: f64 = 9.81;

/// Hull geometry and speed of the wake-generating vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShipParams {
    /// Length overall, m.
    pub length: f64,
    /// Beam, m.
    pub beam: f64,
    /// Draft, m.
    pub draft: f64,
    /// Froude number `U/√(gL)`.
    pub froude: f64,
    /// Track direction relative to the scene x axis (azimuth), rad.
    pub heading: f64,
}

impl ShipParams {
    pub fn new(length: f64, beam: f64, draft: f64, froude: f64, heading: f64) -> Result<Self> {
        let ship = Self { length, beam, draft, froude, heading };
        ship.validate()?;
        Ok(ship)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("length", self.length), ("beam", self.beam), ("draft", self.draft)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("ship {name} must be positive, got {v}")));
            }
        }
        if !(self.froude > 0.0 && self.froude < 1.5) {
            return Err(Error::Domain(format!(
                "Froude number must lie in (0, 1.5), got {}",
                self.froude
            )));
        }
        if !self.heading.is_finite() {
            return Err(Error::Domain("ship heading must be finite".into()));
        }
        Ok(())
    }

    /// Ship speed `Fr·√(gL)`, m/s.
    pub fn speed(&self) -> f64 {
        self.froude * (GRAVITY * self.length).sqrt()
    }
}

/// Wake elevation and slopes on a scene grid (scene-frame axes).
#[derive(Debug, Clone)]
pub struct WakeField {
    pub grid: GridSpec,
    pub elevation: Array2<f64>,
    pub slope_x: Array2<f64>,
    pub slope_y: Array2<f64>,
}

impl WakeField {
    /// An all-zero field (no ship).
    pub fn zero(grid: GridSpec) -> Self {
        let shape = (grid.ny, grid.nx);
        Self {
            grid,
            elevation: Array2::zeros(shape),
            slope_x: Array2::zeros(shape),
            slope_y: Array2::zeros(shape),
        }
    }
}

// --------------------------------------------------------------------
// spectral kernel
// --------------------------------------------------------------------

/// Everything about one point on the steady-wave dispersion curve.
#[derive(Debug, Clone, Copy)]
struct CurvePoint {
    /// α/k₀ ≥ 1.
    a: f64,
    /// Along-track wavenumber, rad/m.
    alpha: f64,
    /// Total wavenumber κ = a²k₀, rad/m.
    kappa: f64,
}

struct WakeKernel {
    k0: f64,
    half_len: f64,
    draft: f64,
    /// −16BLU·Fr⁶/π, the potential prefactor.
    pref_phi: f64,
    /// 16BLU²Fr⁶/(πg) = −(U/g)·pref_phi, the elevation prefactor.
    pref_z: f64,
}

impl WakeKernel {
    fn new(ship: &ShipParams) -> Self {
        let u = ship.speed();
        let fr6 = ship.froude.powi(6);
        let pref_phi = -16.0 * ship.beam * ship.length * u * fr6 / std::f64::consts::PI;
        Self {
            k0: GRAVITY / (u * u),
            half_len: 0.5 * ship.length,
            draft: ship.draft,
            pref_phi,
            pref_z: -pref_phi * u / GRAVITY,
        }
    }

    fn curve(&self, tau: f64) -> CurvePoint {
        let t = tau / self.k0;
        let a2 = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let a = a2.sqrt();
        CurvePoint { a, alpha: a * self.k0, kappa: a2 * self.k0 }
    }

    /// dα/dτ = k₀²τ / (α(2α² − k₀²)); zero at τ = 0, bounded everywhere.
    fn dalpha_dtau(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let p = self.curve(tau);
        self.k0 * self.k0 * tau / (p.alpha * (2.0 * p.alpha * p.alpha - self.k0 * self.k0))
    }

    /// The smooth spectral amplitude `2 s(α)(1−e^{−κD})/(a³(2a²−1))` at the
    /// surface, plus the curve point (for the oscillatory factors).
    fn amplitude(&self, tau: f64) -> (f64, CurvePoint) {
        let p = self.curve(tau);
        let u = p.alpha * self.half_len;
        let hull = u.sin() - u * u.cos();
        let depth = 1.0 - (-p.kappa * self.draft).exp();
        let den = p.a.powi(3) * (2.0 * p.a * p.a - 1.0);
        (2.0 * hull * depth / den, p)
    }

    /// Envelope bound of |amplitude| (oscillatory factors set to 1).
    fn envelope(&self, tau: f64) -> f64 {
        let p = self.curve(tau);
        let u = p.alpha * self.half_len;
        let den = p.a.powi(3) * (2.0 * p.a * p.a - 1.0);
        2.0 * (1.0 + u) / den
    }

    /// Upper integration limit where the envelope drops below 10⁻⁸ of its
    /// peak (pointwise potential evaluation).
    fn tau_envelope_cut(&self) -> f64 {
        let mut peak = 0.0f64;
        for i in 0..=2000 {
            let tau = 50.0 * self.k0 * i as f64 / 2000.0;
            peak = peak.max(self.envelope(tau));
        }
        // beyond the peak the envelope behaves like k₀L/(2t²)
        let t_cut = (self.k0 * 2.0 * self.half_len / (2.0e-8 * peak)).sqrt();
        (t_cut * self.k0).max(60.0 * self.k0)
    }

    /// Upper integration limit for a grid of facet pitch `h`: the largest τ
    /// whose total wavenumber κ is still representable (κ ≤ π/h).
    fn tau_grid_cut(&self, kappa_max: f64) -> f64 {
        let big_k = kappa_max / self.k0;
        if big_k <= 1.0 {
            return 0.0; // even the transverse wave is unresolvable
        }
        self.k0 * (big_k * big_k - big_k).sqrt()
    }
}

// --------------------------------------------------------------------
// oscillatory quadrature
// --------------------------------------------------------------------

/// Partition [0, τ_max] into panels sized so the integrand phase
/// `(|x|+L/2)·α(τ) + |y|·τ` advances at most `budget` radians per panel.
fn phase_panels(
    kernel: &WakeKernel,
    tau_max: f64,
    x_extent: f64,
    y_extent: f64,
    budget: f64,
) -> Result<Vec<(f64, f64)>> {
    let rate = |tau: f64| x_extent * kernel.dalpha_dtau(tau) + y_extent;
    let w_max = tau_max / 16.0;
    let w_min = tau_max / 4.0e5;
    let mut panels = Vec::new();
    let mut tau = 0.0;
    while tau < tau_max {
        let r0 = rate(tau).max(1e-12);
        let mut w = (budget / r0).clamp(w_min, w_max);
        // the phase rate can ramp up across a wide panel; re-check its far end
        let r1 = rate((tau + w).min(tau_max)).max(r0);
        w = (budget / r1).clamp(w_min, w_max);
        let end = (tau + w).min(tau_max);
        panels.push((tau, end));
        tau = end;
        if panels.len() > 400_000 {
            return Err(Error::Numerical(format!(
                "wake quadrature panel count exploded (x extent {x_extent:.1} m, y extent {y_extent:.1} m)"
            )));
        }
    }
    Ok(panels)
}

fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (n, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * f(mid + half * n);
    }
    acc * half
}

/// Integrate one panel with bisection-refined 8-point Gauss rules until the
/// refinement changes the value by less than `tol_abs`.
fn integrate_panel_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol_abs: f64,
    max_depth: usize,
) -> Option<f64> {
    let mut stack = vec![(a, b, gl8(f, a, b), 0usize)];
    let mut total = 0.0;
    while let Some((a, b, coarse, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = gl8(f, a, m);
        let right = gl8(f, m, b);
        let fine = left + right;
        if (fine - coarse).abs() <= tol_abs || b - a < 1e-13 {
            total += fine;
        } else if depth >= max_depth {
            return None;
        } else {
            stack.push((a, m, left, depth + 1));
            stack.push((m, b, right, depth + 1));
        }
    }
    Some(total)
}

/// Adaptive oscillatory integral of `f` over [0, τ_max] with phase-aware
/// initial panels. `scale` sets the absolute tolerance; `where_` labels
/// the evaluation point in the non-convergence error.
fn integrate_oscillatory<F: Fn(f64) -> f64>(
    kernel: &WakeKernel,
    f: &F,
    tau_max: f64,
    x_extent: f64,
    y_extent: f64,
    scale: f64,
    where_: &dyn Fn() -> String,
) -> Result<f64> {
    if tau_max <= 0.0 {
        return Ok(0.0);
    }
    let panels = phase_panels(kernel, tau_max, x_extent, y_extent, 1.2)?;
    let tol_total = 1e-10 * scale.max(1e-30);
    let mut acc = 0.0;
    for &(a, b) in &panels {
        let tol_panel = tol_total * ((b - a) / tau_max).max(1e-6);
        match integrate_panel_adaptive(f, a, b, tol_panel, 28) {
            Some(v) => acc += v,
            None => {
                return Err(Error::Numerical(format!(
                    "wake quadrature failed to converge on panel [{a:.4}, {b:.4}] at {}",
                    where_()
                )))
            }
        }
    }
    Ok(acc)
}

// --------------------------------------------------------------------
// pointwise operations (ship frame)
// --------------------------------------------------------------------

fn check_wake_point(x: f64, z: f64) -> Result<()> {
    if !(x <= 0.0) {
        return Err(Error::Domain(format!(
            "wake field is defined astern of the ship (x ≤ 0), got x = {x}"
        )));
    }
    if !(z <= 0.0) {
        return Err(Error::Domain(format!("wake field needs z ≤ 0, got z = {z}")));
    }
    Ok(())
}

/// Thin-ship velocity potential at a ship-frame point astern (x ≤ 0,
/// z ≤ 0), m²/s. Integrates to the envelope cutoff.
pub fn velocity_potential(ship: &ShipParams, x: f64, y: f64, z: f64) -> Result<f64> {
    ship.validate()?;
    check_wake_point(x, z)?;
    let kernel = WakeKernel::new(ship);
    let tau_max = kernel.tau_envelope_cut();
    potential_bandlimited(&kernel, ship, x, y, z, tau_max)
}

fn potential_bandlimited(
    kernel: &WakeKernel,
    ship: &ShipParams,
    x: f64,
    y: f64,
    z: f64,
    tau_max: f64,
) -> Result<f64> {
    let f = |tau: f64| {
        let (amp, p) = kernel.amplitude(tau);
        amp * (p.kappa * z).exp() * (p.alpha * x).cos() * (tau * y).cos()
    };
    let integral = integrate_oscillatory(
        kernel,
        &f,
        tau_max,
        x.abs() + kernel.half_len,
        y.abs(),
        kernel.envelope(0.0).max(1.0),
        &|| format!("φ({x:.2}, {y:.2}, {z:.2}) for the {:.0} m hull", ship.length),
    )?;
    Ok(kernel.pref_phi * integral)
}

/// Wake surface elevation at a ship-frame point astern, m, from the
/// x-derivative taken under the integral sign. `kappa_max` band-limits the
/// total wavenumber (pass the grid Nyquist when comparing against grid
/// output); `None` integrates to the envelope cutoff.
pub fn wake_elevation_point(
    ship: &ShipParams,
    x: f64,
    y: f64,
    kappa_max: Option<f64>,
) -> Result<f64> {
    ship.validate()?;
    check_wake_point(x, 0.0)?;
    let kernel = WakeKernel::new(ship);
    let tau_max = match kappa_max {
        Some(k) => kernel.tau_grid_cut(k),
        None => kernel.tau_envelope_cut(),
    };
    let f = |tau: f64| {
        let (amp, p) = kernel.amplitude(tau);
        amp * p.alpha * (p.alpha * x).sin() * (tau * y).cos()
    };
    let integral = integrate_oscillatory(
        &kernel,
        &f,
        tau_max,
        x.abs() + kernel.half_len,
        y.abs(),
        kernel.envelope(0.0).max(1.0),
        &|| format!("Z({x:.2}, {y:.2})"),
    )?;
    Ok(kernel.pref_z * integral)
}

/// Fallback elevation via centered differences of the potential,
/// `Z ≈ (U/g)·(φ(x+s) − φ(x−s))/(2s)`, with the same band limit as the
/// analytic path so the two are comparable (they must agree within 1%).
pub fn wake_elevation_centered_difference(
    ship: &ShipParams,
    x: f64,
    y: f64,
    step: f64,
    kappa_max: Option<f64>,
) -> Result<f64> {
    ship.validate()?;
    check_wake_point(x + step, 0.0)?;
    if !(step > 0.0) {
        return Err(Error::Config(format!("difference step must be positive, got {step}")));
    }
    let kernel = WakeKernel::new(ship);
    let tau_max = match kappa_max {
        Some(k) => kernel.tau_grid_cut(k),
        None => kernel.tau_envelope_cut(),
    };
    let hi = potential_bandlimited(&kernel, ship, x + step, y, 0.0, tau_max)?;
    let lo = potential_bandlimited(&kernel, ship, x - step, y, 0.0, tau_max)?;
    Ok(ship.speed() / GRAVITY * (hi - lo) / (2.0 * step))
}

// --------------------------------------------------------------------
// grid evaluation
// --------------------------------------------------------------------

/// Smoothstep taper over the first ship length astern. The thin-ship
/// free-wave integral only describes the far field; evaluated next to the
/// hull it piles up a spurious caustic, and cutting it off abruptly at
/// x = 0 leaves the slopes discontinuous along the beam line (elevation
/// ∝ sin(αx) vanishes there, but its x-derivative ∝ cos(αx) does not).
/// Fading the elevation in over one ship length — with the slopes kept the
/// exact gradient of the faded surface — removes both artifacts while
/// leaving everything beyond a ship length astern untouched. Returns
/// `(w, dw/dx_ship)` for ship-frame coordinate `xs` (ship at 0, wake at
/// xs < 0); both are zero at the hull and reach (1, 0) at xs = −length,
/// C¹ at both ends.
fn near_field_fade(xs: f64, length: f64) -> (f64, f64) {
    let t = (-xs / length).clamp(0.0, 1.0);
    if t >= 1.0 {
        (1.0, 0.0)
    } else {
        (t * t * (3.0 - 2.0 * t), -6.0 * t * (1.0 - t) / length)
    }
}

/// Kelvin wake elevation and slopes on a scene grid. The ship sits at the
/// grid center with its track along `heading`; facets ahead of the ship
/// get exactly zero, and the first ship length astern is smoothly faded
/// in (see [`near_field_fade`]) so the field and its slopes rise
/// continuously from zero at the hull. Band-limited to κ ≤ π/min(dx, dy).
///
/// Every quadrature node is a plane wave in ship coordinates, and along a
/// scene row both its phase factors advance by a constant increment, so
/// two rotor recurrences per (row, node) evaluate the integrand exactly at
/// every facet — no interpolation, any heading, and the quadrature is the
/// only error source.
pub fn wake_elevation(grid: &GridSpec, ship: &ShipParams) -> Result<WakeField> {
    ship.validate()?;
    let kernel = WakeKernel::new(ship);
    let h = grid.dx.min(grid.dy);
    let tau_max = kernel.tau_grid_cut(std::f64::consts::PI / h);
    if tau_max <= 0.0 {
        log::warn!(
            "facet pitch {h} m cannot represent the {:.1} m transverse wake wave; wake field zeroed",
            2.0 * std::f64::consts::PI / kernel.k0
        );
        return Ok(WakeField::zero(*grid));
    }

    // worst-case ship-frame extents over the grid corners size the panels
    let (cx, cy) = grid.center();
    let (sin_h, cos_h) = ship.heading.sin_cos();
    let mut xs_max = 0.0f64;
    let mut ys_max = 0.0f64;
    for &(x, y) in &[
        (grid.x(0) - cx, grid.y(0) - cy),
        (grid.x(grid.nx - 1) - cx, grid.y(0) - cy),
        (grid.x(0) - cx, grid.y(grid.ny - 1) - cy),
        (grid.x(grid.nx - 1) - cx, grid.y(grid.ny - 1) - cy),
    ] {
        xs_max = xs_max.max((cos_h * x + sin_h * y).abs());
        ys_max = ys_max.max((-sin_h * x + cos_h * y).abs());
    }

    // shared quadrature nodes: (τ, weight·amplitude, α)
    let panels = phase_panels(&kernel, tau_max, xs_max + kernel.half_len, ys_max, 2.0)?;
    let mut nodes = Vec::with_capacity(panels.len() * 8);
    for &(a, b) in &panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (n, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            let tau = mid + half * n;
            let (amp, p) = kernel.amplitude(tau);
            nodes.push((tau, w * half * amp, p.alpha));
        }
    }

    // ship-frame accumulation, row-parallel and deterministic
    let mut field = WakeField::zero(*grid);
    let nx = grid.nx;
    let x0 = grid.x(0) - cx;
    let fade_len = ship.length;
    field
        .elevation
        .as_slice_mut()
        .expect("contiguous")
        .par_chunks_mut(nx)
        .zip(field.slope_x.as_slice_mut().expect("contiguous").par_chunks_mut(nx))
        .zip(field.slope_y.as_slice_mut().expect("contiguous").par_chunks_mut(nx))
        .enumerate()
        .for_each(|(iy, ((zrow, sxrow), syrow))| {
            let y = grid.y(iy) - cy;
            for &(tau, wamp, alpha) in &nodes {
                // phases A = α·x_ship, B = τ·y_ship along this scene row
                let (mut sa, mut ca) = (alpha * (cos_h * x0 + sin_h * y)).sin_cos();
                let (mut sb, mut cb) = (tau * (-sin_h * x0 + cos_h * y)).sin_cos();
                let (da_s, da_c) = (alpha * cos_h * grid.dx).sin_cos();
                let (db_s, db_c) = (-tau * sin_h * grid.dx).sin_cos();
                let (wz, wx, wy) = (wamp * alpha, wamp * alpha * alpha, -wamp * alpha * tau);
                for ix in 0..nx {
                    zrow[ix] += wz * sa * cb;
                    sxrow[ix] += wx * ca * cb;
                    syrow[ix] += wy * sa * sb;
                    let (na, nsa) = (ca * da_c - sa * da_s, ca * da_s + sa * da_c);
                    ca = na;
                    sa = nsa;
                    let (nb, nsb) = (cb * db_c - sb * db_s, cb * db_s + sb * db_c);
                    cb = nb;
                    sb = nsb;
                }
            }
            // prefactor, upstream zeroing, near-field fade, and the slope
            // rotation back to scene axes
            for ix in 0..nx {
                let x = x0 + ix as f64 * grid.dx;
                let xs = cos_h * x + sin_h * y;
                if xs >= 0.0 {
                    zrow[ix] = 0.0;
                    sxrow[ix] = 0.0;
                    syrow[ix] = 0.0;
                } else {
                    let (w, dw) = near_field_fade(xs, fade_len);
                    let z = zrow[ix] * kernel.pref_z;
                    // ∂(w·Z)/∂x_ship = w·∂Z/∂x_ship + Z·dw/dx_ship; the
                    // fade weight is constant across the track, so the
                    // ship-frame y slope only picks up the factor w
                    let sx_ship = w * sxrow[ix] * kernel.pref_z + z * dw;
                    let sy_ship = w * syrow[ix] * kernel.pref_z;
                    zrow[ix] = w * z;
                    sxrow[ix] = cos_h * sx_ship - sin_h * sy_ship;
                    syrow[ix] = sin_h * sx_ship + cos_h * sy_ship;
                }
            }
        });
    Ok(field)
}

/// Superpose a wake field on a sea realization: elevations and slopes add
/// pointwise. The wake is steady in the ship frame, so it contributes no
/// wave orbital velocity; the radial-velocity field passes through.
pub fn composite_surface(
    sea: &SeaSurfaceRealization,
    wake: &WakeField,
) -> Result<SeaSurfaceRealization> {
    if sea.grid != wake.grid {
        return Err(Error::GridMismatch {
            expected_nx: sea.grid.nx,
            expected_ny: sea.grid.ny,
            got_nx: wake.grid.nx,
            got_ny: wake.grid.ny,
        });
    }
    let mut out = sea.clone();
    out.elevation += &wake.elevation;
    out.slope_x += &wake.slope_x;
    out.slope_y += &wake.slope_y;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sea_surface::{synthesize, SynthesisOptions};
    use crate::spectrum::SpectrumParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// The vessel used across the test suite: 52 m hull at Fr = 0.5.
    fn test_ship(heading: f64) -> ShipParams {
        ShipParams::new(52.0, 5.7, 3.5, 0.5, heading).unwrap()
    }

    // ---- parameters ----

    #[test]
    fn ship_validation_and_derived_speed() {
        let s = test_ship(0.0);
        assert_relative_eq!(s.speed(), 0.5 * (9.81f64 * 52.0).sqrt(), epsilon = 1e-15);
        assert!(ShipParams::new(0.0, 5.7, 3.5, 0.5, 0.0).is_err());
        assert!(ShipParams::new(52.0, -1.0, 3.5, 0.5, 0.0).is_err());
        assert!(ShipParams::new(52.0, 5.7, 0.0, 0.5, 0.0).is_err());
        assert!(ShipParams::new(52.0, 5.7, 3.5, 1.5, 0.0).is_err());
        assert!(ShipParams::new(52.0, 5.7, 3.5, 0.0, 0.0).is_err());
    }

    // ---- velocity potential ----

    #[test]
    fn potential_golden_point_matches_independent_quadratures() {
        // three ship lengths behind the bow (x = L/2 − 3L), on track, at
        // the surface
        let ship = test_ship(0.0);
        let x = -2.5 * 52.0;
        let got = velocity_potential(&ship, x, 0.0, 0.0).unwrap();

        // frozen from an out-of-repo Simpson evaluation of the same
        // spectral integral (converged to 10 digits)
        assert_relative_eq!(got, 1.2138616764, max_relative = 1e-3);

        // second, in-repo rule: uniform composite Simpson fine enough to
        // resolve every oscillation
        let kernel = WakeKernel::new(&ship);
        let tau_max = kernel.tau_envelope_cut();
        let n = 400_000usize;
        let h = tau_max / (2 * n) as f64;
        let f = |tau: f64| {
            let (amp, p) = kernel.amplitude(tau);
            amp * (p.alpha * x).cos()
        };
        let mut simp = f(0.0) + f(tau_max);
        for k in 1..(2 * n) {
            simp += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = kernel.pref_phi * simp * h / 3.0;
        assert_relative_eq!(got, simpson, max_relative = 1e-4);
    }

    #[test]
    fn potential_is_even_in_y() {
        let ship = test_ship(0.0);
        for (x, y) in [(-80.0, 30.0), (-150.0, 95.0), (-60.0, 12.5)] {
            let plus = velocity_potential(&ship, x, y, 0.0).unwrap();
            let minus = velocity_potential(&ship, x, -y, 0.0).unwrap();
            assert_relative_eq!(plus, minus, max_relative = 1e-12);
        }
    }

    #[test]
    fn vanishing_beam_kills_the_potential() {
        let thin = ShipParams::new(52.0, 1e-12, 3.5, 0.5, 0.0).unwrap();
        let phi = velocity_potential(&thin, -130.0, 0.0, 0.0).unwrap();
        assert!(phi.abs() < 1e-10, "phi = {phi}");
    }

    #[test]
    fn depth_damps_the_potential() {
        let ship = test_ship(0.0);
        let surf = velocity_potential(&ship, -130.0, 0.0, 0.0).unwrap();
        let deep = velocity_potential(&ship, -130.0, 0.0, -40.0).unwrap();
        assert!(deep.abs() < surf.abs());
    }

    #[test]
    fn rejects_points_outside_the_wake_half_plane() {
        let ship = test_ship(0.0);
        assert!(matches!(
            velocity_potential(&ship, 10.0, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            velocity_potential(&ship, -10.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    // ---- elevation ----

    #[test]
    fn elevation_golden_point_band_limited() {
        // frozen from the same out-of-repo oracle, band-limited to the 2 m
        // facet Nyquist κ = π/2
        let ship = test_ship(0.0);
        let z = wake_elevation_point(&ship, -130.0, 0.0, Some(std::f64::consts::PI / 2.0))
            .unwrap();
        assert_relative_eq!(z, 0.6052176183, max_relative = 1e-3);
    }

    #[test]
    fn analytic_derivative_matches_centered_differences_within_one_percent() {
        let ship = test_ship(0.0);
        let kappa = Some(std::f64::consts::PI / 2.0);
        let step = 0.5; // dx/4 for 2 m facets
        for (x, y) in [
            (-130.0, 0.0),
            (-200.0, 0.0),
            (-150.0, 40.0),
            (-100.0, -25.0),
            (-240.0, 70.0),
        ] {
            let analytic = wake_elevation_point(&ship, x, y, kappa).unwrap();
            let fd = wake_elevation_centered_difference(&ship, x, y, step, kappa).unwrap();
            assert!(
                (analytic - fd).abs() <= 0.01 * fd.abs().max(1e-3),
                "({x},{y}): analytic {analytic:.6} vs fd {fd:.6}"
            );
        }
    }

    #[test]
    fn transverse_wavelength_approaches_the_dispersion_value() {
        // peak-to-peak spacing along the track far astern vs 2πU²/g; near
        // the ship the non-stationary (endpoint) part of the integral still
        // contaminates the spacing, so measure where the stationary-phase
        // transverse wave dominates
        let ship = test_ship(0.0);
        let kappa = Some(std::f64::consts::PI / 2.0);
        let want = 2.0 * std::f64::consts::PI * ship.speed().powi(2) / 9.81;
        let (x0, x1, n) = (-2500.0, -900.0, 820);
        let dx = (x1 - x0) / n as f64;
        let z: Vec<f64> = (0..=n)
            .map(|i| wake_elevation_point(&ship, x0 + i as f64 * dx, 0.0, kappa).unwrap())
            .collect();
        let mut peaks = Vec::new();
        for i in 1..n {
            if z[i] > z[i - 1] && z[i] > z[i + 1] {
                peaks.push(x0 + i as f64 * dx);
            }
        }
        assert!(peaks.len() >= 3, "need several peaks, got {}", peaks.len());
        let spacing =
            (peaks.last().unwrap() - peaks.first().unwrap()) / (peaks.len() - 1) as f64;
        assert!(
            (spacing - want).abs() / want < 0.1,
            "peak spacing {spacing:.2} m vs dispersion wavelength {want:.2} m"
        );
    }

    // ---- grid field ----

    #[test]
    fn grid_field_matches_pointwise_integrals() {
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        for heading in [0.0, 0.52] {
            let ship = test_ship(heading);
            let field = wake_elevation(&grid, &ship).unwrap();
            let kappa = Some(std::f64::consts::PI / 4.0);
            let (cx, cy) = grid.center();
            let (sin_h, cos_h) = heading.sin_cos();
            let peak = field.elevation.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(peak > 0.0);
            let mut checked = 0;
            for (iy, ix) in [(10, 12), (15, 40), (40, 20), (50, 50), (30, 8)] {
                let x = grid.x(ix) - cx;
                let y = grid.y(iy) - cy;
                let xs = cos_h * x + sin_h * y;
                let ys = -sin_h * x + cos_h * y;
                if xs >= -4.0 {
                    continue; // ahead of the ship or too close to it
                }
                let (w, _) = near_field_fade(xs, ship.length);
                let want = w * wake_elevation_point(&ship, xs, ys, kappa).unwrap();
                let got = field.elevation[(iy, ix)];
                assert!(
                    (got - want).abs() < 1e-3 * peak.max(want.abs()),
                    "heading {heading}: facet ({iy},{ix}) got {got:.5} want {want:.5}"
                );
                checked += 1;
            }
            assert!(checked >= 3);
        }
    }

    #[test]
    fn near_field_fade_weight_and_derivative() {
        // endpoints are exact and C¹: zero weight and zero derivative at
        // the hull, unit weight and zero derivative one ship length astern
        assert_eq!(near_field_fade(0.0, 52.0), (0.0, 0.0));
        assert_eq!(near_field_fade(-52.0, 52.0), (1.0, 0.0));
        assert_eq!(near_field_fade(-200.0, 52.0), (1.0, 0.0));
        let (w_mid, dw_mid) = near_field_fade(-26.0, 52.0);
        assert_relative_eq!(w_mid, 0.5, epsilon = 1e-15);
        assert_relative_eq!(dw_mid, -1.5 / 52.0, epsilon = 1e-15);
        // inside the ramp the reported derivative matches the weight's
        // finite differences
        for xs in [-5.0, -13.0, -26.0, -40.0, -51.0] {
            let (_, dw) = near_field_fade(xs, 52.0);
            let (wp, _) = near_field_fade(xs + 1e-6, 52.0);
            let (wm, _) = near_field_fade(xs - 1e-6, 52.0);
            assert_relative_eq!(dw, (wp - wm) / 2e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn fade_zone_slopes_are_the_gradient_of_the_faded_surface() {
        // inside the first ship length astern the grid slopes must be the
        // exact gradient of (weight × free-wave elevation): product rule,
        // not just a scaled copy of the raw slopes
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let ship = test_ship(0.0);
        let field = wake_elevation(&grid, &ship).unwrap();
        let kappa = Some(std::f64::consts::PI / 4.0);
        let (cx, cy) = grid.center();
        let peak_sx = field.slope_x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak_sx > 0.0);
        let step = 1.0; // dx/4, same rule as the analytic-derivative test
        let mut checked = 0;
        for (iy, ix) in [(32, 28), (30, 25), (36, 22), (28, 30)] {
            let xs = grid.x(ix) - cx;
            let ys = grid.y(iy) - cy;
            assert!(xs < -2.0 * step && xs > -ship.length + 2.0 * step);
            let (w, dw) = near_field_fade(xs, ship.length);
            let z0 = wake_elevation_point(&ship, xs, ys, kappa).unwrap();
            let zp = wake_elevation_point(&ship, xs + step, ys, kappa).unwrap();
            let zm = wake_elevation_point(&ship, xs - step, ys, kappa).unwrap();
            let want = w * (zp - zm) / (2.0 * step) + z0 * dw;
            let got = field.slope_x[(iy, ix)];
            assert!(
                (got - want).abs() <= 0.02 * peak_sx,
                "facet ({iy},{ix}) at ship-frame x {xs}: got {got:.6e} want {want:.6e}"
            );
            checked += 1;
        }
        assert!(checked >= 3);
    }

    #[test]
    fn slopes_rise_continuously_from_the_hull() {
        // the regression the fade exists for: without it the along-track
        // slope jumps to full amplitude one facet astern of the hull
        let grid = GridSpec::new(128, 128, 2.0, 2.0).unwrap();
        let field = wake_elevation(&grid, &test_ship(0.0)).unwrap();
        let peak_sx = field.slope_x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (cx, _) = grid.center();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let x = grid.x(ix) - cx;
                if (-2.0 * grid.dx..0.0).contains(&x) {
                    let sx = field.slope_x[(iy, ix)].abs();
                    assert!(
                        sx <= 0.1 * peak_sx,
                        "slope_x {sx:.3e} at ({iy},{ix}), x = {x}, vs peak {peak_sx:.3e}"
                    );
                }
            }
        }
    }

    #[test]
    fn grid_field_is_mirror_symmetric_across_the_track() {
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let field = wake_elevation(&grid, &test_ship(0.0)).unwrap();
        let peak = field.elevation.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ny = grid.ny;
        for iy in 0..ny / 2 {
            for ix in 0..grid.nx {
                let a = field.elevation[(iy, ix)];
                let b = field.elevation[(ny - 1 - iy, ix)];
                assert!(
                    (a - b).abs() <= 1e-6 * peak,
                    "mirror asymmetry at ({iy},{ix}): {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn wake_vanishes_ahead_of_the_ship() {
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let field = wake_elevation(&grid, &test_ship(0.0)).unwrap();
        let peak = field.elevation.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (cx, _) = grid.center();
        let mut upstream_max = 0.0f64;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if grid.x(ix) - cx > 52.0 {
                    upstream_max = upstream_max.max(field.elevation[(iy, ix)].abs());
                }
            }
        }
        assert!(
            upstream_max <= 1e-3 * peak,
            "upstream residual {upstream_max} vs peak {peak}"
        );
    }

    #[test]
    fn wake_energy_concentrates_inside_the_kelvin_wedge() {
        let grid = GridSpec::new(128, 128, 4.0, 4.0).unwrap();
        let field = wake_elevation(&grid, &test_ship(0.0)).unwrap();
        let (cx, cy) = grid.center();
        let half_angle = 25.0f64.to_radians();
        let (mut inside, mut total) = (0.0, 0.0);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let e2 = field.elevation[(iy, ix)].powi(2);
                if e2 == 0.0 {
                    continue;
                }
                let x = grid.x(ix) - cx;
                let y = grid.y(iy) - cy;
                total += e2;
                if y.abs().atan2(-x) <= half_angle {
                    inside += e2;
                }
            }
        }
        assert!(total > 0.0);
        assert!(
            inside / total >= 0.9,
            "only {:.1}% of wake energy inside the 25 degree wedge",
            100.0 * inside / total
        );
    }

    #[test]
    fn grid_field_is_free_of_quadrature_ringing() {
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let field = wake_elevation(&grid, &test_ship(0.0)).unwrap();
        // local RMS over 8x8 blocks; adjacent-facet jumps must stay below
        // 5x the block level
        let block = 8;
        for by in 0..grid.ny / block {
            for bx in 0..grid.nx / block {
                let mut rms = 0.0;
                for iy in by * block..(by + 1) * block {
                    for ix in bx * block..(bx + 1) * block {
                        rms += field.elevation[(iy, ix)].powi(2);
                    }
                }
                rms = (rms / (block * block) as f64).sqrt();
                if rms < 1e-12 {
                    continue;
                }
                for iy in by * block..(by + 1) * block {
                    for ix in bx * block..(bx + 1) * block - 1 {
                        let jump =
                            (field.elevation[(iy, ix + 1)] - field.elevation[(iy, ix)]).abs();
                        assert!(
                            jump <= 5.0 * rms,
                            "jump {jump} vs local rms {rms} at ({iy},{ix})"
                        );
                    }
                }
            }
        }
    }

    // ---- composite ----

    fn small_sea(seed: u64) -> SeaSurfaceRealization {
        let grid = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let params = SpectrumParams { u10: 5.0, ..Default::default() };
        let options = SynthesisOptions {
            wavenumber_bins: 24,
            direction_bins: 16,
            ..Default::default()
        };
        synthesize(&params, &grid, &options, seed).unwrap()
    }

    #[test]
    fn zero_wake_is_the_additive_identity() {
        let sea = small_sea(3);
        let wake = WakeField::zero(sea.grid);
        let out = composite_surface(&sea, &wake).unwrap();
        assert_eq!(out.elevation, sea.elevation);
        assert_eq!(out.slope_x, sea.slope_x);
        assert_eq!(out.slope_y, sea.slope_y);
        assert_eq!(out.orbital_velocity_radial, sea.orbital_velocity_radial);
    }

    #[test]
    fn composite_adds_pointwise_and_leaves_orbital_velocity_alone() {
        let sea = small_sea(4);
        let wake = wake_elevation(&sea.grid, &test_ship(0.3)).unwrap();
        let out = composite_surface(&sea, &wake).unwrap();
        for idx in [(0usize, 0usize), (13, 57), (40, 22)] {
            assert_abs_diff_eq!(
                out.elevation[idx],
                sea.elevation[idx] + wake.elevation[idx],
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                out.slope_x[idx],
                sea.slope_x[idx] + wake.slope_x[idx],
                epsilon = 1e-15
            );
        }
        assert_eq!(out.orbital_velocity_radial, sea.orbital_velocity_radial);
        // superposition linearity: adding the wake twice in two steps
        // equals adding a doubled wake once
        let twice = composite_surface(&out, &wake).unwrap();
        let mut doubled = wake.clone();
        doubled.elevation *= 2.0;
        doubled.slope_x *= 2.0;
        doubled.slope_y *= 2.0;
        let direct = composite_surface(&sea, &doubled).unwrap();
        assert_abs_diff_eq!(
            twice.elevation[(20, 20)],
            direct.elevation[(20, 20)],
            epsilon = 1e-12
        );
    }

    #[test]
    fn composite_rejects_grid_mismatch() {
        let sea = small_sea(5);
        let other = GridSpec::new(32, 32, 4.0, 4.0).unwrap();
        let wake = WakeField::zero(other);
        assert!(matches!(
            composite_surface(&sea, &wake),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn pure_wake_composite_equals_the_wake() {
        let sea0 = small_sea(6);
        let zero = SeaSurfaceRealization::from_components(
            sea0.grid,
            Vec::new(),
            0.0,
            sea0.incidence,
            0,
        )
        .unwrap();
        let wake = wake_elevation(&sea0.grid, &test_ship(0.0)).unwrap();
        let out = composite_surface(&zero, &wake).unwrap();
        assert_eq!(out.elevation, wake.elevation);
        assert_eq!(out.slope_y, wake.slope_y);
    }
}
