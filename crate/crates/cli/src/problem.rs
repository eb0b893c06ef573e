//! Problem assembly from a run configuration.

use rbdo_core::models::{
    collapse_model, collapse_model_names, hull_spec, Benchmark, BenchmarkComponent, HullComponent, HullModel,
    StiffenerLimits,
};
use rbdo_core::probability::{DesignVector, RandomVectorSpec};
use rbdo_core::LimitState;

use crate::config::{ProblemConfig, RunConfig};
use crate::error::CliError;

#[derive(Debug)]
pub enum Model {
    Benchmark(Benchmark),
    Hull(HullModel),
}

/// Everything a command needs: model, random vector, design box.
#[derive(Debug)]
pub struct Problem {
    pub model: Model,
    pub spec: RandomVectorSpec,
    /// Empty when the problem has no design variable.
    pub design: DesignVector,
    pub limit_state_names: Vec<String>,
    constraint_names: Vec<&'static str>,
}

/// One limit state of either model family.
#[derive(Debug)]
pub enum Component<'a> {
    Benchmark(BenchmarkComponent),
    Hull(HullComponent<'a>),
}

impl LimitState for Component<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Self::Benchmark(g) => g.evaluate(x),
            Self::Hull(g) => g.evaluate(x),
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn benchmark(
    name: &str,
    dim: Option<usize>,
    beta: Option<f64>,
    offset: Option<f64>,
    std_dev: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
) -> Result<Benchmark, CliError> {
    let mut b = Benchmark::by_name(name).ok_or_else(|| {
        let names: Vec<&str> = rbdo_core::models::benchmark_catalog().iter().map(Benchmark::name).collect();
        config_error(format!("unknown benchmark `{name}`; available: {}", names.join(", ")))
    })?;
    let reject = |field: &str, given: bool| -> Result<(), CliError> {
        if given {
            Err(config_error(format!("problem.{field} does not apply to benchmark `{name}`")))
        } else {
            Ok(())
        }
    };
    match &mut b {
        Benchmark::Linear { dim: d, beta: bt } => {
            reject("offset", offset.is_some())?;
            reject("std_dev", std_dev.is_some())?;
            reject("lower", lower.is_some())?;
            reject("upper", upper.is_some())?;
            *d = dim.unwrap_or(*d);
            *bt = beta.unwrap_or(*bt);
            if *d == 0 || !bt.is_finite() {
                return Err(config_error("linear benchmark needs dim ≥ 1 and a finite beta"));
            }
        }
        Benchmark::Series2d => {
            for (field, given) in [
                ("dim", dim.is_some()),
                ("beta", beta.is_some()),
                ("offset", offset.is_some()),
                ("std_dev", std_dev.is_some()),
                ("lower", lower.is_some()),
                ("upper", upper.is_some()),
            ] {
                reject(field, given)?;
            }
        }
        Benchmark::RbdoClosedForm {
            offset: a,
            std_dev: s,
            lower: lo,
            upper: hi,
        } => {
            reject("dim", dim.is_some())?;
            reject("beta", beta.is_some())?;
            *a = offset.unwrap_or(*a);
            *s = std_dev.unwrap_or(*s);
            *lo = lower.unwrap_or(*lo);
            *hi = upper.unwrap_or(*hi);
            if !(*s > 0.0 && lo < hi && a.is_finite()) {
                return Err(config_error("closed-form benchmark needs std_dev > 0 and lower < upper"));
            }
        }
    }
    Ok(b)
}

impl Problem {
    pub fn from_config(config: &RunConfig) -> Result<Self, CliError> {
        let (model, mut spec, bounds_fraction) = match &config.problem {
            ProblemConfig::Benchmark {
                name,
                dim,
                beta,
                offset,
                std_dev,
                lower,
                upper,
            } => {
                let b = benchmark(name, *dim, *beta, *offset, *std_dev, *lower, *upper)?;
                (Model::Benchmark(b), b.spec(), None)
            }
            ProblemConfig::Hull {
                collapse_model: name,
                overall_mode,
                interframe_mode,
                web_limit,
                flange_limit,
                bounds_fraction,
            } => {
                let collapse = collapse_model(name).ok_or_else(|| {
                    config_error(format!(
                        "unknown collapse model `{name}`; available: {}",
                        collapse_model_names().join(", ")
                    ))
                })?;
                if *overall_mode < 2 || *interframe_mode < 2 {
                    return Err(config_error("buckling mode numbers must be at least 2"));
                }
                if web_limit.is_nan() || flange_limit.is_nan() || *web_limit <= 0.0 || *flange_limit <= 0.0 {
                    return Err(config_error("stiffener limits must be positive"));
                }
                let mut hull = HullModel::new(collapse);
                hull.overall_mode = *overall_mode;
                hull.interframe_mode = *interframe_mode;
                hull.stiffener_limits = StiffenerLimits {
                    web: *web_limit,
                    flange: *flange_limit,
                };
                (Model::Hull(hull), hull_spec(), Some(*bounds_fraction))
            }
        };

        for v in &config.variables {
            let i = spec
                .index_of(&v.name)
                .ok_or_else(|| config_error(format!("unknown variable `{}`; known: {}", v.name, spec.names.join(", "))))?;
            spec.marginals[i] = v.marginal()?;
        }
        spec.validate()
            .map_err(|e| config_error(format!("variables: {e}")))?;

        let nd = spec.design_dim();
        let check = |field: &str, v: &Option<Vec<f64>>| -> Result<(), CliError> {
            match v {
                Some(v) if v.len() != nd => Err(config_error(format!(
                    "design.{field} has {} entries, the problem has {nd} design variables",
                    v.len()
                ))),
                _ => Ok(()),
            }
        };
        let d = &config.design;
        check("initial", &d.initial)?;
        check("lower", &d.lower)?;
        check("upper", &d.upper)?;
        let initial = d.initial.clone().unwrap_or_else(|| spec.initial_design());
        let (default_lower, default_upper) = match (&model, bounds_fraction) {
            (Model::Benchmark(b), _) => b.design_bounds(),
            (Model::Hull(_), Some(f)) => (
                initial.iter().map(|v| v * (1.0 - f)).collect(),
                initial.iter().map(|v| v * (1.0 + f)).collect(),
            ),
            (Model::Hull(_), None) => unreachable!(),
        };
        let lower = d.lower.clone().unwrap_or(default_lower);
        let upper = d.upper.clone().unwrap_or(default_upper);
        let design = DesignVector::new(initial, lower, upper).map_err(|e| config_error(format!("design: {e}")))?;
        if !design.is_within_bounds() {
            return Err(config_error("design.initial lies outside its bounds"));
        }

        let (limit_state_names, constraint_names) = match &model {
            Model::Benchmark(b) => (
                (1..=b.limit_state_count()).map(|l| format!("g{l}")).collect(),
                Vec::new(),
            ),
            Model::Hull(h) => {
                let mut names = Vec::new();
                if h.stiffener_limits.web.is_finite() {
                    names.push("web");
                }
                if h.stiffener_limits.flange.is_finite() {
                    names.push("flange");
                }
                (vec!["overall".into(), "interframe".into()], names)
            }
        };
        Ok(Self {
            model,
            spec,
            design,
            limit_state_names,
            constraint_names,
        })
    }

    pub fn limit_states(&self) -> Vec<Component<'_>> {
        match &self.model {
            Model::Benchmark(b) => (0..b.limit_state_count()).map(|l| Component::Benchmark(b.component(l))).collect(),
            Model::Hull(h) => (0..2).map(|l| Component::Hull(h.component(l))).collect(),
        }
    }

    /// True system limit state `min_l g_l`.
    pub fn system_value(&self, x: &[f64]) -> f64 {
        self.limit_states()
            .iter()
            .map(|g| g.evaluate(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cost(&self, theta: &[f64]) -> f64 {
        match &self.model {
            Model::Benchmark(b) => b.cost(theta),
            Model::Hull(h) => h.cost(&self.spec, theta).unwrap_or(f64::NAN),
        }
    }

    pub fn constraint_names(&self) -> &[&'static str] {
        &self.constraint_names
    }

    /// Deterministic constraint `name` at `θ`, feasible when `<= 0`.
    pub fn constraint(&self, index: usize, theta: &[f64]) -> f64 {
        let Model::Hull(h) = &self.model else {
            return f64::NAN;
        };
        match h.stiffener_bounds(&self.spec, theta) {
            Ok((web, flange)) => match self.constraint_names[index] {
                "web" => web,
                _ => flange,
            },
            Err(_) => f64::NAN,
        }
    }

    /// Closed-form system failure probability, when known.
    pub fn exact_pf(&self, theta: &[f64]) -> Option<f64> {
        match &self.model {
            Model::Benchmark(b) => b.exact_pf(theta),
            Model::Hull(_) => None,
        }
    }

    pub fn require_design(&self, command: &str) -> Result<(), CliError> {
        if self.design.dim() == 0 {
            Err(config_error(format!("`{command}` needs a problem with design variables")))
        } else {
            Ok(())
        }
    }
}
