//! Differentiable aerodynamic surrogate.
//!
//! Lift comes from thin-airfoil theory scaled by a per-model slope factor.
//! Drag is skin friction from a turbulent flat-plate correlation times a
//! thickness form factor and the wetted perimeter, plus a `k_p * c_l^2`
//! loading term. The five catalog variants stand in for five closure models.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    self, area_sensitivity, camber_thickness_with, deform, perimeter_sensitivity, AirfoilShape,
    CamberSampler, DesignVector, FfdLattice,
};
use crate::uncertainty::{UncertainInput, RE_MAX, RE_MIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionLaw {
    /// 0.074 Re^-1/5
    PrandtlPower,
    /// 0.455 / (log10 Re)^2.58
    PrandtlSchlichting,
    /// 0.075 / (log10 Re - 2)^2
    Ittc1957,
    /// 0.427 / (log10 Re - 0.407)^2.64
    SchultzGrunow,
    /// 0.0576 Re^-1/5
    PowerLaw0576,
}

impl FrictionLaw {
    pub fn skin_friction(self, re: f64) -> f64 {
        let lg = re.log10();
        match self {
            Self::PrandtlPower => 0.074 * re.powf(-0.2),
            Self::PrandtlSchlichting => 0.455 / lg.powf(2.58),
            Self::Ittc1957 => 0.075 / ((lg - 2.0) * (lg - 2.0)),
            Self::SchultzGrunow => 0.427 / (lg - 0.407).powf(2.64),
            Self::PowerLaw0576 => 0.0576 * re.powf(-0.2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeroModelVariant {
    pub id: u8,
    pub friction_law: FrictionLaw,
    /// Multiplies the thin-airfoil lift slope.
    pub lift_slope_factor: f64,
    /// Coefficient of the `c_l^2` drag term.
    pub lift_drag_factor: f64,
}

impl AeroModelVariant {
    pub fn validate(&self) -> Result<()> {
        if !(self.lift_slope_factor > 0.0) || !(self.lift_drag_factor >= 0.0) {
            return Err(Error::Config(format!(
                "model {}: need m > 0 and k_p >= 0, got m = {}, k_p = {}",
                self.id, self.lift_slope_factor, self.lift_drag_factor
            )));
        }
        Ok(())
    }
}

pub fn model_catalog() -> Vec<AeroModelVariant> {
    const LAWS: [FrictionLaw; 5] = [
        FrictionLaw::PrandtlPower,
        FrictionLaw::PrandtlSchlichting,
        FrictionLaw::Ittc1957,
        FrictionLaw::SchultzGrunow,
        FrictionLaw::PowerLaw0576,
    ];
    const SLOPE: [f64; 5] = [1.00, 0.97, 0.99, 1.02, 1.04];
    const KP: [f64; 5] = [0.0060, 0.0075, 0.0068, 0.0055, 0.0050];
    (0..5)
        .map(|i| AeroModelVariant {
            id: i as u8 + 1,
            friction_law: LAWS[i],
            lift_slope_factor: SLOPE[i],
            lift_drag_factor: KP[i],
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftPartials {
    pub c_l: f64,
    pub d_alpha_deg: f64,
    pub d_slopes: Vec<f64>,
}

/// Thin-airfoil lift from camber slopes sampled at the midpoints of `n`
/// equal intervals of `(0, pi)` in the Glauert angle.
pub fn lift_coefficient(camber_slopes: &[f64], alpha_deg: f64, variant: &AeroModelVariant) -> LiftPartials {
    let n = camber_slopes.len();
    let w = PI / n as f64;
    let mut alpha_l0 = 0.0;
    let mut d_slopes = Vec::with_capacity(n);
    let m = variant.lift_slope_factor;
    for (q, s) in camber_slopes.iter().enumerate() {
        let t = (q as f64 + 0.5) * w;
        let k = w * (t.cos() - 1.0);
        alpha_l0 -= k * s / PI;
        // dc_l/ds = -m 2 pi d(alpha_l0)/ds
        d_slopes.push(2.0 * m * k);
    }
    let c_l = m * 2.0 * PI * (alpha_deg.to_radians() - alpha_l0);
    LiftPartials { c_l, d_alpha_deg: m * 2.0 * PI * (PI / 180.0), d_slopes }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DragPartials {
    pub c_d: f64,
    pub d_c_l: f64,
    pub d_t_over_c: f64,
    pub d_perimeter: f64,
}

pub fn form_factor(t_over_c: f64) -> f64 {
    1.0 + 2.0 * t_over_c + 60.0 * t_over_c.powi(4)
}

pub fn drag_coefficient(
    c_l: f64,
    t_over_c: f64,
    perimeter: f64,
    re: f64,
    variant: &AeroModelVariant,
) -> Result<DragPartials> {
    if !(RE_MIN..=RE_MAX).contains(&re) {
        return Err(Error::ReynoldsOutOfRange(re));
    }
    if !(t_over_c > 0.0 && t_over_c < 0.3) {
        return Err(Error::InvalidArgument(format!("t/c = {t_over_c} outside (0, 0.3)")));
    }
    if !(perimeter > 2.0) {
        return Err(Error::InvalidArgument(format!("perimeter = {perimeter} must exceed 2")));
    }
    let cf = variant.friction_law.skin_friction(re);
    let ff = form_factor(t_over_c);
    let kp = variant.lift_drag_factor;
    Ok(DragPartials {
        c_d: cf * ff * perimeter + kp * c_l * c_l,
        d_c_l: 2.0 * kp * c_l,
        d_t_over_c: cf * perimeter * (2.0 + 240.0 * t_over_c.powi(3)),
        d_perimeter: cf * ff,
    })
}

/// Lift and drag for one `(design, input)` pair with gradients over the
/// flattened design `[ffd_dy..., alpha_deg]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AeroResponse {
    pub c_l: f64,
    pub c_d: f64,
    pub grad_c_l: Vec<f64>,
    pub grad_c_d: Vec<f64>,
}

impl AeroResponse {
    pub fn is_finite(&self) -> bool {
        self.c_l.is_finite()
            && self.c_d.is_finite()
            && self.grad_c_l.iter().chain(&self.grad_c_d).all(|g| g.is_finite())
    }
}

/// Forward-plus-sensitivity solve behind which any aerodynamic model can sit.
pub trait Evaluator: Sync {
    /// Length of the flattened design vector.
    fn n_theta(&self) -> usize;

    fn evaluate(&self, design: &DesignVector, xi: &UncertainInput) -> Result<AeroResponse>;

    /// Area relative to the baseline and its gradient over the flattened design.
    fn area_ratio(&self, design: &DesignVector) -> Result<(f64, Vec<f64>)>;
}

/// Geometry settings shared by every evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySettings {
    pub n_per_surface: usize,
    pub nx: usize,
    pub ny: usize,
    pub margin: f64,
    pub n_quad: usize,
}

impl Default for GeometrySettings {
    fn default() -> Self {
        Self {
            n_per_surface: geometry::DEFAULT_PANELS,
            nx: geometry::DEFAULT_NX,
            ny: geometry::DEFAULT_NY,
            margin: geometry::DEFAULT_MARGIN,
            n_quad: geometry::DEFAULT_QUAD,
        }
    }
}

pub struct SurrogateEvaluator {
    baseline: AirfoilShape,
    lattice: FfdLattice,
    sampler: CamberSampler,
    /// d(camber slope_q)/d(ffd_dy[v])
    slope_jacobian: Vec<Vec<f64>>,
    /// d(area)/d(ffd_dy[v])
    area_gradient: Vec<f64>,
    catalog: Vec<AeroModelVariant>,
}

impl SurrogateEvaluator {
    pub fn new(settings: &GeometrySettings, catalog: Vec<AeroModelVariant>) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::Config("empty model catalog".into()));
        }
        for v in &catalog {
            v.validate()?;
        }
        let baseline = geometry::baseline_naca0012(settings.n_per_surface)?;
        let lattice =
            geometry::build_lattice(&baseline, settings.nx, settings.ny, settings.margin)?;
        let sampler = CamberSampler::new(&baseline, settings.n_quad)?;
        let sens = geometry::shape_sensitivities(&lattice, &baseline);
        let slope_jacobian = sampler.slope_jacobian(&baseline, &sens);
        let area_gradient = area_sensitivity(&lattice, &baseline);
        Ok(Self { baseline, lattice, sampler, slope_jacobian, area_gradient, catalog })
    }

    pub fn with_defaults() -> Result<Self> {
        Self::new(&GeometrySettings::default(), model_catalog())
    }

    pub fn baseline(&self) -> &AirfoilShape {
        &self.baseline
    }

    pub fn lattice(&self) -> &FfdLattice {
        &self.lattice
    }

    pub fn catalog(&self) -> &[AeroModelVariant] {
        &self.catalog
    }

    pub fn n_free(&self) -> usize {
        self.lattice.n_free()
    }

    pub fn shape(&self, design: &DesignVector) -> Result<AirfoilShape> {
        deform(&self.baseline, &self.lattice, design)
    }

    fn variant(&self, model_id: u8) -> Result<&AeroModelVariant> {
        self.catalog.get((model_id as usize).wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "model_id {model_id} outside 1..={}",
                self.catalog.len()
            ))
        })
    }
}

impl Evaluator for SurrogateEvaluator {
    fn n_theta(&self) -> usize {
        self.lattice.n_free() + 1
    }

    fn evaluate(&self, design: &DesignVector, xi: &UncertainInput) -> Result<AeroResponse> {
        let variant = self.variant(xi.model_id)?;
        let shape = self.shape(design)?;
        let ct = camber_thickness_with(&shape, &self.sampler)?;
        let lift = lift_coefficient(&ct.camber_slopes, design.alpha_deg, variant);
        let drag = drag_coefficient(lift.c_l, ct.t_over_c, ct.perimeter, xi.re_c, variant)?;

        let n_free = self.lattice.n_free();
        let d_perimeter = perimeter_sensitivity(&self.lattice, &shape);
        let i = ct.thickness_station;
        let (up, lo) = (shape.upper_index(i), shape.lower_index(i));
        let pinned = |p| self.lattice.is_pinned(p);

        let mut grad_c_l = Vec::with_capacity(n_free + 1);
        let mut grad_c_d = Vec::with_capacity(n_free + 1);
        for v in 0..n_free {
            let node = self.lattice.free_node(v);
            let dcl: f64 = self
                .slope_jacobian
                .iter()
                .zip(&lift.d_slopes)
                .map(|(row, d)| row[v] * d)
                .sum();
            let w_up = if pinned(up) { 0.0 } else { self.lattice.weights(up)[node] };
            let w_lo = if pinned(lo) { 0.0 } else { self.lattice.weights(lo)[node] };
            let dt = w_up - w_lo;
            grad_c_l.push(dcl);
            grad_c_d.push(
                drag.d_c_l * dcl + drag.d_t_over_c * dt + drag.d_perimeter * d_perimeter[v],
            );
        }
        grad_c_l.push(lift.d_alpha_deg);
        grad_c_d.push(drag.d_c_l * lift.d_alpha_deg);

        Ok(AeroResponse { c_l: lift.c_l, c_d: drag.c_d, grad_c_l, grad_c_d })
    }

    fn area_ratio(&self, design: &DesignVector) -> Result<(f64, Vec<f64>)> {
        let shape = self.shape(design)?;
        let a0 = self.baseline.area();
        let mut grad: Vec<f64> = self.area_gradient.iter().map(|g| g / a0).collect();
        grad.push(0.0);
        Ok((shape.area() / a0, grad))
    }
}

/// Counts calls to `evaluate` on the wrapped evaluator.
pub struct CountingEvaluator<E> {
    inner: E,
    count: AtomicU64,
}

impl<E: Evaluator> CountingEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, count: AtomicU64::new(0) }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Evaluator> Evaluator for CountingEvaluator<E> {
    fn n_theta(&self) -> usize {
        self.inner.n_theta()
    }

    fn evaluate(&self, design: &DesignVector, xi: &UncertainInput) -> Result<AeroResponse> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(design, xi)
    }

    fn area_ratio(&self, design: &DesignVector) -> Result<(f64, Vec<f64>)> {
        self.inner.area_ratio(design)
    }
}
