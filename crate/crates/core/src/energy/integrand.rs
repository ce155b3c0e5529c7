use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared properties of an energy density f(x, n, A).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandMeta {
    pub name: String,
    /// Growth exponent p in f ≥ c|A|^p.
    pub growth_exponent: f64,
    /// Coercivity constant c in f ≥ c|A|^p.
    pub coercivity: f64,
    pub x_dependent: bool,
    pub n_dependent: bool,
    pub convex_in_a: bool,
    pub quadratic_in_a: bool,
    /// False for densities outside the continuity/convexity/coercivity class
    /// the convergence theory covers.
    pub satisfies_assumptions: bool,
}

/// Energy density f(x, n, A) with x a point on the surface, n a unit normal
/// and A a 3×3 shape operator.
pub trait Density: Send + Sync + fmt::Debug {
    fn meta(&self) -> IntegrandMeta;

    fn value(&self, x: &Point3<f64>, n: &Vector3<f64>, a: &Matrix3<f64>) -> f64;

    /// Derivative with respect to A. The default uses central differences.
    fn grad_a(&self, x: &Point3<f64>, n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        let h = 1e-6 * (1.0 + a.amax());
        Matrix3::from_fn(|i, j| {
            let mut plus = *a;
            let mut minus = *a;
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            (self.value(x, n, &plus) - self.value(x, n, &minus)) / (2.0 * h)
        })
    }

    /// ω(x) when the density has the form ω(x)|A|².
    fn quadratic_weight(&self, _x: &Point3<f64>) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct Willmore;

impl Density for Willmore {
    fn meta(&self) -> IntegrandMeta {
        IntegrandMeta {
            name: "willmore".into(),
            growth_exponent: 2.0,
            coercivity: 1.0,
            x_dependent: false,
            n_dependent: false,
            convex_in_a: true,
            quadratic_in_a: true,
            satisfies_assumptions: true,
        }
    }

    fn value(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> f64 {
        a.norm_squared()
    }

    fn grad_a(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        2.0 * a
    }

    fn quadratic_weight(&self, _x: &Point3<f64>) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct PowerWillmore {
    p: f64,
}

impl Density for PowerWillmore {
    fn meta(&self) -> IntegrandMeta {
        IntegrandMeta {
            name: format!("p-willmore:{}", self.p),
            growth_exponent: self.p,
            coercivity: 1.0,
            x_dependent: false,
            n_dependent: false,
            convex_in_a: true,
            quadratic_in_a: self.p == 2.0,
            satisfies_assumptions: true,
        }
    }

    fn value(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> f64 {
        a.norm().powf(self.p)
    }

    fn grad_a(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        let norm = a.norm();
        if norm == 0.0 {
            Matrix3::zeros()
        } else {
            self.p * norm.powf(self.p - 2.0) * a
        }
    }

    fn quadratic_weight(&self, _x: &Point3<f64>) -> Option<f64> {
        (self.p == 2.0).then_some(1.0)
    }
}

type WeightFn = Arc<dyn Fn(&Point3<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
struct WeightedWillmore {
    name: String,
    weight: WeightFn,
    lower_bound: f64,
}

impl fmt::Debug for WeightedWillmore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedWillmore")
            .field("name", &self.name)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl Density for WeightedWillmore {
    fn meta(&self) -> IntegrandMeta {
        IntegrandMeta {
            name: self.name.clone(),
            growth_exponent: 2.0,
            coercivity: self.lower_bound,
            x_dependent: true,
            n_dependent: false,
            convex_in_a: true,
            quadratic_in_a: true,
            satisfies_assumptions: true,
        }
    }

    fn value(&self, x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> f64 {
        (self.weight)(x) * a.norm_squared()
    }

    fn grad_a(&self, x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        2.0 * (self.weight)(x) * a
    }

    fn quadratic_weight(&self, x: &Point3<f64>) -> Option<f64> {
        Some((self.weight)(x))
    }
}

/// (tr A - H₀)². Not coercive in the full matrix.
#[derive(Debug, Clone, Copy)]
struct SpontaneousCurvature {
    h0: f64,
}

impl Density for SpontaneousCurvature {
    fn meta(&self) -> IntegrandMeta {
        IntegrandMeta {
            name: format!("spontaneous-curvature:{}", self.h0),
            growth_exponent: 2.0,
            coercivity: 0.0,
            x_dependent: false,
            n_dependent: false,
            convex_in_a: true,
            quadratic_in_a: false,
            satisfies_assumptions: false,
        }
    }

    fn value(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> f64 {
        (a.trace() - self.h0).powi(2)
    }

    fn grad_a(&self, _x: &Point3<f64>, _n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        2.0 * (a.trace() - self.h0) * Matrix3::identity()
    }
}

/// Shared handle to an energy density.
#[derive(Debug, Clone)]
pub struct Integrand {
    density: Arc<dyn Density>,
}

impl Integrand {
    pub fn new(density: impl Density + 'static) -> Self {
        Self {
            density: Arc::new(density),
        }
    }

    /// f = |A|².
    pub fn willmore() -> Self {
        Self::new(Willmore)
    }

    /// f = |A|^p with p > 1.
    pub fn p_willmore(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("growth exponent {p} must exceed 1")));
        }
        Ok(Self::new(PowerWillmore { p }))
    }

    /// f = ω(x)|A|² with ω ≥ `lower_bound` > 0 on the surface.
    pub fn weighted_willmore(
        name: impl Into<String>,
        weight: impl Fn(&Point3<f64>) -> f64 + Send + Sync + 'static,
        lower_bound: f64,
    ) -> Result<Self> {
        if !(lower_bound > 0.0) {
            return Err(Error::InvalidInput("weight lower bound must be positive".into()));
        }
        Ok(Self::new(WeightedWillmore {
            name: name.into(),
            weight: Arc::new(weight),
            lower_bound,
        }))
    }

    /// f = (tr A - H₀)², which is not coercive in A. Only constructed when
    /// the caller explicitly accepts that.
    pub fn spontaneous_curvature(h0: f64, allow_assumption_violating: bool) -> Result<Self> {
        if !allow_assumption_violating {
            return Err(Error::UnsupportedIntegrand(format!(
                "spontaneous-curvature:{h0} is not coercive; enable assumption-violating densities to use it"
            )));
        }
        Ok(Self::new(SpontaneousCurvature { h0 }))
    }

    /// Parses `willmore`, `p-willmore:<p>`, `weighted-willmore:<a>` (weight
    /// 1 + a·z²) or `spontaneous-curvature:<h0>`.
    pub fn parse(spec: &str, allow_assumption_violating: bool) -> Result<Self> {
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let number = |arg: Option<&str>| -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidInput(format!("integrand `{head}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad integrand parameter: {e}")))
        };
        match head {
            "willmore" => Ok(Self::willmore()),
            "p-willmore" => Self::p_willmore(number(arg)?),
            "weighted-willmore" => {
                let a = number(arg)?;
                if a < 0.0 {
                    return Err(Error::InvalidInput("weight coefficient must be >= 0".into()));
                }
                Self::weighted_willmore(spec, move |x| 1.0 + a * x.z * x.z, 1.0)
            }
            "spontaneous-curvature" => {
                Self::spontaneous_curvature(number(arg)?, allow_assumption_violating)
            }
            other => Err(Error::InvalidInput(format!("unknown integrand `{other}`"))),
        }
    }

    pub fn meta(&self) -> IntegrandMeta {
        self.density.meta()
    }

    pub fn name(&self) -> String {
        self.density.meta().name
    }

    pub fn value(&self, x: &Point3<f64>, n: &Vector3<f64>, a: &Matrix3<f64>) -> f64 {
        self.density.value(x, n, a)
    }

    pub fn grad_a(&self, x: &Point3<f64>, n: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
        self.density.grad_a(x, n, a)
    }

    pub fn quadratic_weight(&self, x: &Point3<f64>) -> Option<f64> {
        self.density.quadratic_weight(x)
    }
}

/// Outcome of randomized spot checks of coercivity and convexity.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub samples: usize,
    pub coercivity_failures: usize,
    pub convexity_failures: usize,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.coercivity_failures == 0 && self.convexity_failures == 0
    }
}

/// Samples random (x, n, A) and checks f ≥ c|A|^p with the declared
/// constants, and midpoint convexity in A on random pairs.
pub fn spot_check_assumptions(integrand: &Integrand, samples: usize, seed: u64) -> AssumptionCheck {
    let meta = integrand.meta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AssumptionCheck {
        samples,
        coercivity_failures: 0,
        convexity_failures: 0,
    };
    let random_matrix =
        |rng: &mut ChaCha8Rng| Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    for _ in 0..samples {
        let x = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            .try_normalize(1e-12)
            .unwrap_or_else(Vector3::z);
        let a = random_matrix(&mut rng);
        let b = random_matrix(&mut rng);
        let fa = integrand.value(&x, &n, &a);
        let fb = integrand.value(&x, &n, &b);
        let bound = meta.coercivity * a.norm().powf(meta.growth_exponent);
        if fa < bound * (1.0 - 1e-12) || meta.coercivity <= 0.0 {
            report.coercivity_failures += 1;
        }
        let mid = integrand.value(&x, &n, &((a + b) * 0.5));
        if mid > 0.5 * (fa + fb) + 1e-12 * (1.0 + fa.abs() + fb.abs()) {
            report.convexity_failures += 1;
        }
    }
    report
}
