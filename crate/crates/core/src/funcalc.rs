//! Holomorphic functional calculus by trapezoidal quadrature on circles.
//!
//! `f(T) = (1/2 pi i) \oint f(lambda) (lambda I - T)^-1 dlambda`. On
//! `lambda_k = c + r e^{i theta_k}` the measure `dlambda = i r e^{i theta} dtheta`
//! cancels the `1/(2 pi i)`, leaving
//! `f(T) = (1/N) sum_k f(lambda_k) (lambda_k I - T)^-1 (lambda_k - c)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Bindings, FuncExpr};
use crate::family::{FamilyNode, FamilySpec};
use crate::linalg::{solve_inverse, ComplexMatrix, Inversion, C64};
use crate::parallel;
use crate::spectrum::SpectrumEstimate;

pub const MIN_NODES: usize = 64;
pub const DEFAULT_NODES: usize = 256;
/// Clusters must sit inside this fraction of the contour radius.
pub const ENCLOSURE_MARGIN: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    center: C64,
    radius: f64,
    nodes: usize,
}

impl ContourSpec {
    pub fn new(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::BadParameter(format!("contour radius {radius} must be positive")));
        }
        if nodes < MIN_NODES || !nodes.is_power_of_two() {
            return Err(Error::BadParameter(format!(
                "contour nodes {nodes} must be a power of two and at least {MIN_NODES}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::BadParameter("contour center must be finite".into()));
        }
        Ok(ContourSpec { center, radius, nodes })
    }

    /// Circle with the default node count.
    pub fn circle(center: C64, radius: f64) -> Result<Self> {
        ContourSpec::new(center, radius, DEFAULT_NODES)
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn node(&self, k: usize) -> C64 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / self.nodes as f64;
        self.center + C64::from_polar(self.radius, theta)
    }

    /// Every flagged cluster lies within `0.95 * radius` of the center.
    pub fn encloses(&self, spectrum: &SpectrumEstimate) -> bool {
        let limit = ENCLOSURE_MARGIN * self.radius;
        spectrum
            .clusters
            .iter()
            .all(|c| (c.centroid - self.center).norm() + c.radius <= limit)
    }
}

fn quadrature(t: &ComplexMatrix, f: &FuncExpr, contour: &ContourSpec, h: Option<f64>) -> Result<ComplexMatrix> {
    let weighted: Vec<Result<ComplexMatrix>> = parallel::install(|| {
        (0..contour.nodes)
            .into_par_iter()
            .map(|k| {
                let lambda = contour.node(k);
                let inverse = match solve_inverse(&t.shifted_from(lambda)) {
                    Inversion::Inverse { inverse, .. } => inverse,
                    Inversion::Singular => return Err(Error::SingularOnContour { index: k, lambda }),
                };
                let bindings = Bindings {
                    lambda: Some(lambda),
                    h: h.map(|h| C64::new(h, 0.0)),
                };
                let fz = f.eval(&bindings)?;
                Ok(inverse.scale(fz * (lambda - contour.center)))
            })
            .collect()
    });
    let mut acc = ComplexMatrix::zeros(t.dim());
    for term in weighted {
        acc = acc.add(&term?)?;
    }
    Ok(acc.scale_real(1.0 / contour.nodes as f64))
}

/// `f(t)` for a contour enclosing the spectrum of `t`.
pub fn contour_funcalc(t: &ComplexMatrix, f: &FuncExpr, contour: &ContourSpec) -> Result<ComplexMatrix> {
    quadrature(t, f, contour, None)
}

/// As [`contour_funcalc`], refusing to run when the caller's enclosure check failed.
pub fn contour_funcalc_checked(
    t: &ComplexMatrix,
    f: &FuncExpr,
    contour: &ContourSpec,
    encloses: bool,
) -> Result<ComplexMatrix> {
    if !encloses {
        return Err(Error::NonEnclosing);
    }
    contour_funcalc(t, f, contour)
}

/// The family `h -> f(T_h)`, memoized per `h`.
pub struct DerivedFamily {
    inner: FamilySpec,
    expr: FuncExpr,
    source: String,
    contour: ContourSpec,
    memo: Mutex<HashMap<u64, ComplexMatrix>>,
}

impl DerivedFamily {
    pub fn inner(&self) -> &FamilySpec {
        &self.inner
    }

    pub fn expr(&self) -> &FuncExpr {
        &self.expr
    }

    /// Expression text as given.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn eval(&self, h: f64) -> Result<ComplexMatrix> {
        let key = h.to_bits();
        if let Some(m) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(m.clone());
        }
        // Computed outside the lock; concurrent requests for the same h agree bitwise.
        let t = self.inner.eval(h)?;
        let value = quadrature(&t, &self.expr, &self.contour, Some(h)).map_err(|e| Error::at_h(h, e))?;
        self.memo
            .lock()
            .expect("memo lock")
            .entry(key)
            .or_insert_with(|| value.clone());
        Ok(value)
    }
}

impl fmt::Debug for DerivedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DerivedFamily")
            .field("inner", &self.inner)
            .field("expr", &self.source)
            .field("contour", &self.contour)
            .finish()
    }
}

/// `{f(T_h)}` as a new family.
pub fn family_funcalc(tf: &FamilySpec, f: &FuncExpr, contour: &ContourSpec) -> FamilySpec {
    family_funcalc_with_source(tf, f, &f.to_string(), contour)
}

/// As [`family_funcalc`], keeping the original expression text for serialization.
pub fn family_funcalc_with_source(tf: &FamilySpec, f: &FuncExpr, source: &str, contour: &ContourSpec) -> FamilySpec {
    let derived = DerivedFamily {
        inner: tf.clone(),
        expr: f.clone(),
        source: source.to_string(),
        contour: *contour,
        memo: Mutex::new(HashMap::new()),
    };
    FamilySpec::from_parts(tf.dim(), FamilyNode::Funcalc(Arc::new(derived)))
}
