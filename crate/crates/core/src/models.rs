//! Ring-stiffened pressure hull (cost, stochastic model, limit states with
//! pluggable collapse pressures) and analytic benchmark problems.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::exec::LimitState;
use crate::probability::{normal, MarginalSpec, RandomVectorSpec};

/// Steel density, kg/m³.
pub const STEEL_DENSITY: f64 = 7850.0;
/// Sea water density, kg/m³.
pub const SEA_WATER_DENSITY: f64 = 1026.0;

/// Single-bay geometry, all lengths in mm.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HullGeometry {
    pub shell_thickness: f64,
    pub web_height: f64,
    pub web_thickness: f64,
    pub flange_width: f64,
    pub flange_thickness: f64,
    pub frame_spacing: f64,
    pub radius: f64,
}

impl HullGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("shell_thickness", self.shell_thickness),
            ("web_height", self.web_height),
            ("web_thickness", self.web_thickness),
            ("flange_width", self.flange_width),
            ("flange_thickness", self.flange_thickness),
            ("frame_spacing", self.frame_spacing),
            ("radius", self.radius),
        ];
        for (name, v) in dims {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Material constants: moduli and stresses in MPa, densities in kg/m³.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson: f64,
    pub yield_stress: f64,
    pub steel_density: f64,
    pub water_density: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            youngs_modulus: 200_000.0,
            poisson: 0.3,
            yield_stress: 390.0,
            steel_density: STEEL_DENSITY,
            water_density: SEA_WATER_DENSITY,
        }
    }
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.yield_stress > 0.0) {
            return Err(domain("Young's modulus and yield stress must be positive"));
        }
        if !(self.poisson > 0.0 && self.poisson < 0.5) {
            return Err(domain("Poisson's ratio must lie in (0, 0.5)"));
        }
        if !(self.steel_density > 0.0 && self.water_density > 0.0) {
            return Err(domain("densities must be positive"));
        }
        Ok(())
    }
}

/// Steel volume of one bay, mm³: shell annulus about the mean radius plus
/// the internal web and flange rings.
pub fn steel_volume(g: &HullGeometry) -> f64 {
    let shell = 2.0 * PI * g.radius * g.shell_thickness * g.frame_spacing;
    let inner = g.radius - 0.5 * g.shell_thickness;
    let web_radius = inner - 0.5 * g.web_height;
    let flange_radius = inner - g.web_height - 0.5 * g.flange_thickness;
    let web = 2.0 * PI * web_radius * g.web_height * g.web_thickness;
    let flange = 2.0 * PI * flange_radius * g.flange_width * g.flange_thickness;
    shell + web + flange
}

/// Displaced volume of one bay, mm³, to the outer shell surface.
pub fn displaced_volume(g: &HullGeometry) -> f64 {
    let outer = g.radius + 0.5 * g.shell_thickness;
    PI * outer * outer * g.frame_spacing
}

/// Hull weight over displaced water weight (a fraction, not a percentage).
pub fn hull_cost(geometry: &HullGeometry, material: &Material) -> Result<f64> {
    geometry.validate()?;
    material.validate()?;
    Ok(material.steel_density * steel_volume(geometry) / (material.water_density * displaced_volume(geometry)))
}

/// Out-of-roundness and out-of-straightness amplitudes (mm) with their mode
/// numbers.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Imperfections {
    pub overall_amplitude: f64,
    pub interframe_amplitude: f64,
    pub overall_mode: u32,
    pub interframe_mode: u32,
}

/// Collapse pressures (MPa) of the overall and interframe modes.
pub trait CollapsePressureModel: Send + Sync {
    fn name(&self) -> &str;

    fn pressures(&self, geometry: &HullGeometry, material: &Material, imperfections: &Imperfections) -> (f64, f64);
}

/// Demonstration-only collapse pressures from textbook elastic buckling
/// estimates with a yield cap; not a design method.
///
/// Overall: ring buckling `(n²-1) E I / (R_c³ L_s)` of the frame with a
/// shell strip of width `L_s`. Interframe: the Windenburg-Trilling lobar
/// estimate. Each is knocked down by `1 / (1 + A/e)` and combined with a
/// hoop-yield pressure by `1/p = 1/p_el + 1/p_y`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlaceholderCollapse;

impl PlaceholderCollapse {
    pub const NAME: &'static str = "placeholder";
}

impl CollapsePressureModel for PlaceholderCollapse {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn pressures(&self, g: &HullGeometry, m: &Material, imp: &Imperfections) -> (f64, f64) {
        let e = g.shell_thickness;
        let r = g.radius;
        let ls = g.frame_spacing;
        let inner = r - 0.5 * e;

        // Section: shell strip, web, flange; offsets measured inward from the
        // shell mid-surface.
        let parts = [
            (ls * e, 0.0, ls * e.powi(3) / 12.0),
            (
                g.web_height * g.web_thickness,
                0.5 * e + 0.5 * g.web_height,
                g.web_thickness * g.web_height.powi(3) / 12.0,
            ),
            (
                g.flange_width * g.flange_thickness,
                0.5 * e + g.web_height + 0.5 * g.flange_thickness,
                g.flange_width * g.flange_thickness.powi(3) / 12.0,
            ),
        ];
        let area: f64 = parts.iter().map(|p| p.0).sum();
        let centroid = parts.iter().map(|p| p.0 * p.1).sum::<f64>() / area;
        let inertia: f64 = parts.iter().map(|p| p.2 + p.0 * (p.1 - centroid).powi(2)).sum();
        let rc = r - centroid;
        let n2 = f64::from(imp.overall_mode).powi(2);
        let overall_elastic = (n2 - 1.0) * m.youngs_modulus * inertia / (rc.powi(3) * ls);
        let overall_yield = m.yield_stress * area / (r * ls);

        let t = e / (2.0 * r);
        let denom = (ls / (2.0 * r) - 0.45 * t.sqrt()).max(1e-3);
        let lobar_elastic =
            2.42 * m.youngs_modulus * t.powf(2.5) / ((1.0 - m.poisson * m.poisson).powf(0.75) * denom);
        let shell_yield = m.yield_stress * e / inner;

        let knock = |p: f64, a: f64| p / (1.0 + a.abs() / e);
        let combine = |el: f64, y: f64| 1.0 / (1.0 / el + 1.0 / y);
        (
            combine(knock(overall_elastic, imp.overall_amplitude), overall_yield),
            combine(knock(lobar_elastic, imp.interframe_amplitude), shell_yield),
        )
    }
}

/// Collapse-pressure models selectable by name.
pub fn collapse_model(name: &str) -> Option<Box<dyn CollapsePressureModel>> {
    match name {
        PlaceholderCollapse::NAME => Some(Box::new(PlaceholderCollapse)),
        _ => None,
    }
}

pub fn collapse_model_names() -> &'static [&'static str] {
    &[PlaceholderCollapse::NAME]
}

/// Overall, interframe and system limit-state values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullLimitStates {
    pub overall: f64,
    pub interframe: f64,
    pub system: f64,
}

/// `ln(p/p0)` for each collapse pressure and their minimum.
pub fn hull_limit_states(overall_pressure: f64, interframe_pressure: f64, service_pressure: f64) -> Result<HullLimitStates> {
    for p in [overall_pressure, interframe_pressure, service_pressure] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(domain(alloc::format!("collapse-pressure model returned a nonpositive pressure {p}")));
        }
    }
    let overall = (overall_pressure / service_pressure).ln();
    let interframe = (interframe_pressure / service_pressure).ln();
    Ok(HullLimitStates {
        overall,
        interframe,
        system: overall.min(interframe),
    })
}

/// Slenderness constants of the stiffener proportion limits.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StiffenerLimits {
    pub web: f64,
    pub flange: f64,
}

impl Default for StiffenerLimits {
    fn default() -> Self {
        Self { web: 1.1, flange: 0.5 }
    }
}

/// `h_w/e_w - C₁√(E/σ_y)` and `w_f/e_f - C₂√(E/σ_y)`; an infinite constant
/// disables its constraint (value `-∞`).
pub fn bs5500_stiffener_bounds(geometry: &HullGeometry, material: &Material, limits: &StiffenerLimits) -> (f64, f64) {
    let slender = (material.youngs_modulus / material.yield_stress).sqrt();
    let bound = |ratio: f64, c: f64| {
        if c.is_infinite() {
            f64::NEG_INFINITY
        } else {
            ratio - c * slender
        }
    };
    (
        bound(geometry.web_height / geometry.web_thickness, limits.web),
        bound(geometry.flange_width / geometry.flange_thickness, limits.flange),
    )
}

/// Variable order of the hull random vector.
pub const HULL_VARIABLES: [&str; 13] = [
    "E", "nu", "sigma_y", "L_s", "R", "e", "h_w", "e_w", "w_f", "e_f", "A_n", "A_m", "p0",
];

/// Design variables: means of `e, h_w, e_w, w_f, e_f`.
pub const HULL_DESIGN_VARIABLES: [&str; 5] = ["e", "h_w", "e_w", "w_f", "e_f"];

/// Reference stochastic model of the hull.
///
/// Imperfection means are `5R/3000` (out-of-roundness) and `L_s/300`
/// (out-of-straightness) with a 50% coefficient of variation, so the 99.5%
/// quantiles sit near three times the mean.
pub fn hull_spec() -> RandomVectorSpec {
    let r = 2488.0;
    let ls = 600.0;
    let ln = |mean: f64, cv: f64| MarginalSpec::lognormal(mean, cv * mean);
    let an = 5.0 * r / 3000.0;
    let am = ls / 300.0;
    let marginals = vec![
        ln(200_000.0, 0.05),
        MarginalSpec::deterministic(0.3),
        ln(390.0, 0.05),
        MarginalSpec::deterministic(ls),
        MarginalSpec::deterministic(r),
        ln(24.0, 0.03).linked(0),
        ln(156.0, 0.03).linked(1),
        ln(10.0, 0.03).linked(2),
        ln(120.0, 0.03).linked(3),
        ln(24.0, 0.03).linked(4),
        ln(an, 0.5),
        ln(am, 0.5),
        MarginalSpec::deterministic(2.0),
    ];
    RandomVectorSpec {
        names: HULL_VARIABLES.iter().map(|s| s.to_string()).collect(),
        marginals,
    }
}

/// Physical hull vector split into its parts.
pub fn hull_parts(x: &[f64], density: (f64, f64)) -> Result<(HullGeometry, Material, f64, f64, f64)> {
    if x.len() != HULL_VARIABLES.len() {
        return Err(Error::Dimension {
            expected: HULL_VARIABLES.len(),
            got: x.len(),
        });
    }
    let geometry = HullGeometry {
        frame_spacing: x[3],
        radius: x[4],
        shell_thickness: x[5],
        web_height: x[6],
        web_thickness: x[7],
        flange_width: x[8],
        flange_thickness: x[9],
    };
    let material = Material {
        youngs_modulus: x[0],
        poisson: x[1],
        yield_stress: x[2],
        steel_density: density.0,
        water_density: density.1,
    };
    Ok((geometry, material, x[10], x[11], x[12]))
}

/// Hull limit states over the physical vector ordered as [`HULL_VARIABLES`].
pub struct HullModel {
    pub collapse: Box<dyn CollapsePressureModel>,
    pub overall_mode: u32,
    pub interframe_mode: u32,
    pub material: Material,
    pub stiffener_limits: StiffenerLimits,
}

impl core::fmt::Debug for HullModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("HullModel")
            .field("collapse", &self.collapse.name())
            .field("overall_mode", &self.overall_mode)
            .field("interframe_mode", &self.interframe_mode)
            .field("material", &self.material)
            .field("stiffener_limits", &self.stiffener_limits)
            .finish()
    }
}

impl HullModel {
    pub fn new(collapse: Box<dyn CollapsePressureModel>) -> Self {
        Self {
            collapse,
            overall_mode: 2,
            interframe_mode: 14,
            material: Material::default(),
            stiffener_limits: StiffenerLimits::default(),
        }
    }

    pub fn limit_states(&self, x: &[f64]) -> Result<HullLimitStates> {
        let (geometry, material, an, am, p0) = hull_parts(x, (self.material.steel_density, self.material.water_density))?;
        geometry.validate()?;
        let imp = Imperfections {
            overall_amplitude: an,
            interframe_amplitude: am,
            overall_mode: self.overall_mode,
            interframe_mode: self.interframe_mode,
        };
        let (pn, pm) = self.collapse.pressures(&geometry, &material, &imp);
        hull_limit_states(pn, pm, p0)
    }

    /// Component limit state: 0 overall, 1 interframe.
    pub fn component(&self, index: usize) -> HullComponent<'_> {
        HullComponent { model: self, index }
    }

    /// Geometry at design `θ` with the spec's fixed dimensions.
    pub fn design_geometry(&self, spec: &RandomVectorSpec, design: &[f64]) -> Result<HullGeometry> {
        let means = spec.resolve(design)?.means();
        Ok(hull_parts(&means, (self.material.steel_density, self.material.water_density))?.0)
    }

    pub fn cost(&self, spec: &RandomVectorSpec, design: &[f64]) -> Result<f64> {
        hull_cost(&self.design_geometry(spec, design)?, &self.material)
    }

    /// Stiffener proportion limits at design `θ`, using mean material values.
    pub fn stiffener_bounds(&self, spec: &RandomVectorSpec, design: &[f64]) -> Result<(f64, f64)> {
        let means = spec.resolve(design)?.means();
        let (geometry, material, ..) = hull_parts(&means, (self.material.steel_density, self.material.water_density))?;
        Ok(bs5500_stiffener_bounds(&geometry, &material, &self.stiffener_limits))
    }
}

#[derive(Debug)]
pub struct HullComponent<'a> {
    model: &'a HullModel,
    index: usize,
}

impl LimitState for HullComponent<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self.model.limit_states(x) {
            Ok(v) if self.index == 0 => v.overall,
            Ok(v) => v.interframe,
            Err(_) => f64::NAN,
        }
    }
}

/// Analytic and brute-force-checkable test problems.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "kebab-case"))]
pub enum Benchmark {
    /// `g(u) = β - Σu_i/√n` in standard-normal space.
    Linear { dim: usize, beta: f64 },
    /// Two-branch series system in two standard-normal variables:
    /// `3 + 0.1d² + 0.5 sin(1.5d) ∓ s` with `d = u₁ - u₂`, `s = (u₁ + u₂)/√2`.
    Series2d,
    /// `X_i ~ N(θ_i, σ)`, `g = X₁ + X₂ - a`, cost `θ₁² + θ₂²` on `[lower, upper]²`.
    RbdoClosedForm { offset: f64, std_dev: f64, lower: f64, upper: f64 },
}

impl Benchmark {
    pub const LINEAR: &'static str = "linear";
    pub const SERIES_2D: &'static str = "series-2d";
    pub const RBDO_CLOSED_FORM: &'static str = "rbdo-closed-form";

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => Self::LINEAR,
            Self::Series2d => Self::SERIES_2D,
            Self::RbdoClosedForm { .. } => Self::RBDO_CLOSED_FORM,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        benchmark_catalog().into_iter().find(|b| b.name() == name)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Linear { dim, .. } => *dim,
            Self::Series2d | Self::RbdoClosedForm { .. } => 2,
        }
    }

    pub fn spec(&self) -> RandomVectorSpec {
        let names = (1..=self.dim()).map(|i| alloc::format!("x{i}")).collect::<Vec<String>>();
        let marginals = match *self {
            Self::Linear { dim, .. } => vec![MarginalSpec::normal(0.0, 1.0); dim],
            Self::Series2d => vec![MarginalSpec::normal(0.0, 1.0); 2],
            Self::RbdoClosedForm { std_dev, lower, upper, .. } => {
                // Initial design at the middle of the bounds.
                let mid = 0.5 * (lower + upper);
                vec![
                    MarginalSpec::normal(mid, std_dev).linked(0),
                    MarginalSpec::normal(mid, std_dev).linked(1),
                ]
            }
        };
        RandomVectorSpec { names, marginals }
    }

    /// Design bounds, empty when the problem has no design variable.
    pub fn design_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            Self::RbdoClosedForm { lower, upper, .. } => (vec![lower; 2], vec![upper; 2]),
            _ => (Vec::new(), Vec::new()),
        }
    }

    pub fn limit_state_count(&self) -> usize {
        match self {
            Self::Series2d => 2,
            _ => 1,
        }
    }

    /// Component `index` at physical point `x`.
    pub fn component_value(&self, index: usize, x: &[f64]) -> f64 {
        match *self {
            Self::Linear { dim, beta } => beta - x.iter().sum::<f64>() / (dim as f64).sqrt(),
            Self::Series2d => {
                let d = x[0] - x[1];
                let s = (x[0] + x[1]) / core::f64::consts::SQRT_2;
                let common = 3.0 + 0.1 * d * d + 0.5 * (1.5 * d).sin();
                if index == 0 {
                    common - s
                } else {
                    common + s
                }
            }
            Self::RbdoClosedForm { offset, .. } => x[0] + x[1] - offset,
        }
    }

    /// System value: minimum over the components.
    pub fn value(&self, x: &[f64]) -> f64 {
        (0..self.limit_state_count())
            .map(|l| self.component_value(l, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn component(&self, index: usize) -> BenchmarkComponent {
        BenchmarkComponent {
            benchmark: *self,
            index: Some(index),
        }
    }

    pub fn system(&self) -> BenchmarkComponent {
        BenchmarkComponent {
            benchmark: *self,
            index: None,
        }
    }

    /// Closed-form failure probability at `design`, when one exists.
    pub fn exact_pf(&self, design: &[f64]) -> Option<f64> {
        match *self {
            Self::Linear { beta, .. } => Some(normal::cdf(-beta)),
            Self::Series2d => None,
            Self::RbdoClosedForm { .. } => Some(normal::cdf(-self.exact_beta(design)?)),
        }
    }

    /// Closed-form reliability index at `design`, when one exists.
    pub fn exact_beta(&self, design: &[f64]) -> Option<f64> {
        match *self {
            Self::Linear { beta, .. } => Some(beta),
            Self::Series2d => None,
            Self::RbdoClosedForm { offset, std_dev, .. } => {
                Some((design[0] + design[1] - offset) / (std_dev * core::f64::consts::SQRT_2))
            }
        }
    }

    /// Cost of a design (means of the design-linked variables).
    pub fn cost(&self, design: &[f64]) -> f64 {
        design.iter().map(|t| t * t).sum()
    }

    /// Deterministic optimum: mean-value constraint `g ≥ 0` active.
    pub fn ddo_optimum(&self) -> Option<Vec<f64>> {
        self.rbdo_optimum(0.0)
    }

    /// Closed-form optimum under `β ≥ beta_target`, clipped to the bounds.
    pub fn rbdo_optimum(&self, beta_target: f64) -> Option<Vec<f64>> {
        match *self {
            Self::RbdoClosedForm {
                offset,
                std_dev,
                lower,
                upper,
            } => {
                let t = 0.5 * (offset + beta_target * std_dev * core::f64::consts::SQRT_2);
                Some(vec![t.clamp(lower, upper); 2])
            }
            _ => None,
        }
    }
}

/// A benchmark component (or the system minimum) as a limit state.
#[derive(Clone, Copy, Debug)]
pub struct BenchmarkComponent {
    benchmark: Benchmark,
    index: Option<usize>,
}

impl LimitState for BenchmarkComponent {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self.index {
            Some(l) => self.benchmark.component_value(l, x),
            None => self.benchmark.value(x),
        }
    }
}

/// Catalog version; bumped whenever a benchmark definition changes.
pub const CATALOG_VERSION: u32 = 1;

pub fn benchmark_catalog() -> Vec<Benchmark> {
    vec![
        Benchmark::Linear { dim: 2, beta: 3.0 },
        Benchmark::Series2d,
        Benchmark::RbdoClosedForm {
            offset: 4.0,
            std_dev: 1.0,
            lower: 1.0,
            upper: 8.0,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> HullGeometry {
        HullGeometry {
            shell_thickness: 24.0,
            web_height: 156.0,
            web_thickness: 10.0,
            flange_width: 120.0,
            flange_thickness: 24.0,
            frame_spacing: 600.0,
            radius: 2488.0,
        }
    }

    #[test]
    fn reference_costs() {
        let m = Material::default();
        let c = hull_cost(&table1(), &m).unwrap();
        assert!((100.0 * c - 18.86).abs() < 0.5, "{}", 100.0 * c);
        let ddo = HullGeometry {
            shell_thickness: 16.90,
            web_height: 160.27,
            web_thickness: 7.16,
            flange_width: 81.89,
            flange_thickness: 16.76,
            ..table1()
        };
        let c = hull_cost(&ddo, &m).unwrap();
        assert!((100.0 * c - 12.75).abs() < 0.5, "{}", 100.0 * c);
    }

    #[test]
    fn shell_only_limit() {
        let tiny = 1e-9;
        let g = HullGeometry {
            web_height: tiny,
            web_thickness: tiny,
            flange_width: tiny,
            flange_thickness: tiny,
            ..table1()
        };
        let m = Material::default();
        let (r, e) = (2488.0, 24.0);
        let expect = 7850.0 * 2.0 * r * e / (1026.0 * (r + e / 2.0).powi(2));
        assert!((hull_cost(&g, &m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn cost_rejects_nonpositive() {
        let g = HullGeometry {
            web_thickness: 0.0,
            ..table1()
        };
        assert!(hull_cost(&g, &Material::default()).is_err());
    }

    #[test]
    fn log_pressure_ratios() {
        let v = hull_limit_states(2.0, 2.0, 2.0).unwrap();
        assert_eq!((v.overall, v.interframe, v.system), (0.0, 0.0, 0.0));
        let v = hull_limit_states(4.0, 1.0, 2.0).unwrap();
        assert!((v.overall - 2f64.ln()).abs() < 1e-15);
        assert!((v.interframe + 2f64.ln()).abs() < 1e-15);
        assert_eq!(v.system, v.interframe);
        assert!(hull_limit_states(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn stiffener_bounds() {
        let m = Material::default();
        let (f1, f2) = bs5500_stiffener_bounds(&table1(), &m, &StiffenerLimits::default());
        assert!(f1 < 0.0 && f2 < 0.0);
        let off = StiffenerLimits {
            web: f64::INFINITY,
            flange: f64::INFINITY,
        };
        assert_eq!(bs5500_stiffener_bounds(&table1(), &m, &off), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        // Web exactly at its limit.
        let slender = (m.youngs_modulus / m.yield_stress).sqrt();
        let g = HullGeometry {
            web_height: 1.1 * slender * 10.0,
            ..table1()
        };
        let (f1, _) = bs5500_stiffener_bounds(&g, &m, &StiffenerLimits::default());
        assert!(f1.abs() < 1e-12);
    }

    #[test]
    fn hull_spec_at_mean() {
        let spec = hull_spec();
        spec.validate().unwrap();
        assert_eq!(spec.design_dim(), 5);
        assert_eq!(spec.initial_design(), vec![24.0, 156.0, 10.0, 120.0, 24.0]);
        let model = HullModel::new(collapse_model("placeholder").unwrap());
        let c = model.cost(&spec, &spec.initial_design()).unwrap();
        assert!((100.0 * c - 18.86).abs() < 0.5);
        let x = spec.resolve(&spec.initial_design()).unwrap().means();
        let v = model.limit_states(&x).unwrap();
        assert!(v.overall.is_finite() && v.interframe.is_finite());
        assert!(v.system <= v.overall && v.system <= v.interframe);
        assert!(collapse_model("unknown").is_none());
    }

    #[test]
    fn placeholder_increases_with_shell_thickness() {
        let m = Material::default();
        let imp = Imperfections {
            overall_amplitude: 4.0,
            interframe_amplitude: 2.0,
            overall_mode: 2,
            interframe_mode: 14,
        };
        let thin = PlaceholderCollapse.pressures(&table1(), &m, &imp);
        let thick = PlaceholderCollapse.pressures(
            &HullGeometry {
                shell_thickness: 26.0,
                ..table1()
            },
            &m,
            &imp,
        );
        assert!(thick.1 > thin.1);
        assert!(thin.0 > 0.0 && thin.1 > 0.0);
    }

    #[test]
    fn closed_form_optimum() {
        let b = Benchmark::RbdoClosedForm {
            offset: 0.0,
            std_dev: 1.0,
            lower: 1.0,
            upper: 8.0,
        };
        let t = b.rbdo_optimum(3.0).unwrap();
        assert!((t[0] + t[1] - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((b.exact_beta(&t).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn linear_pf() {
        let b = Benchmark::Linear { dim: 2, beta: 3.0 };
        assert!((b.exact_pf(&[]).unwrap() - 1.3499e-3).abs() < 1e-7);
        assert_eq!(b.value(&[0.0, 0.0]), 3.0);
    }

    #[test]
    fn catalog_names_resolve() {
        for b in benchmark_catalog() {
            assert_eq!(Benchmark::by_name(b.name()), Some(b));
            b.spec().validate().unwrap();
        }
    }
}
