//! Mamdani inference: min conjunction, min implication, max aggregation,
//! centroid defuzzification.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// Number of evenly spaced abscissae used for centroid integration.
pub const CENTROID_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MembershipFunction {
    Triangle { a: f64, b: f64, c: f64 },
    Trapezoid { a: f64, b: f64, c: f64, d: f64 },
}

impl MembershipFunction {
    pub fn triangle(a: f64, b: f64, c: f64) -> Self {
        MembershipFunction::Triangle { a, b, c }
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Self {
        MembershipFunction::Trapezoid { a, b, c, d }
    }

    /// Corners as a trapezoid `[a, b, c, d]`.
    pub fn corners(&self) -> [f64; 4] {
        match *self {
            MembershipFunction::Triangle { a, b, c } => [a, b, b, c],
            MembershipFunction::Trapezoid { a, b, c, d } => [a, b, c, d],
        }
    }

    pub fn is_valid(&self) -> bool {
        let k = self.corners();
        k.iter().all(|v| v.is_finite()) && k.windows(2).all(|w| w[0] <= w[1])
    }

    /// Degree of membership in [0, 1]. A vertical edge (a == b or c == d)
    /// is a shoulder: the plateau value holds up to and including it.
    pub fn degree(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.corners();
        if x < a {
            0.0
        } else if x < b {
            (x - a) / (b - a)
        } else if x <= c {
            1.0
        } else if x < d {
            (d - x) / (d - c)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub mf: MembershipFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub terms: Vec<Term>,
}

impl Variable {
    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    /// Largest membership over all terms at `x`.
    pub fn coverage(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.mf.degree(x)).fold(0.0, f64::max)
    }
}

/// `(variable index, term index)`.
pub type Clause = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedents: Vec<Clause>,
    pub consequents: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    pub inputs: Vec<Variable>,
    pub outputs: Vec<Variable>,
    pub rules: Vec<Rule>,
}

impl RuleBase {
    pub fn validate(&self) -> Result<(), FuzzyError> {
        let config = |m: String| Err(FuzzyError::Config(m));
        for v in self.inputs.iter().chain(&self.outputs) {
            if !(v.min.is_finite() && v.max.is_finite() && v.min < v.max) {
                return config(format!("variable {}: empty universe", v.name));
            }
            if v.terms.is_empty() {
                return config(format!("variable {} has no terms", v.name));
            }
            for t in &v.terms {
                if !t.mf.is_valid() {
                    return config(format!("{}.{}: breakpoints must ascend", v.name, t.label));
                }
            }
        }
        for v in &self.inputs {
            let n = 10_000;
            for i in 0..=n {
                let x = v.min + (v.max - v.min) * i as f64 / n as f64;
                if v.coverage(x) <= 0.0 {
                    return config(format!("input {} has a membership gap at {x}", v.name));
                }
            }
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.antecedents.is_empty() || r.consequents.is_empty() {
                return config(format!("rule {} is incomplete", i + 1));
            }
            let ok = |vars: &[Variable], (v, t): Clause| vars.get(v).is_some_and(|var| t < var.terms.len());
            if !r.antecedents.iter().all(|c| ok(&self.inputs, *c)) || !r.consequents.iter().all(|c| ok(&self.outputs, *c)) {
                return config(format!("rule {} references an undeclared term", i + 1));
            }
        }
        Ok(())
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|v| v.name == name)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|v| v.name == name)
    }

    /// Runs every rule. `inputs` are crisp values by variable name; values
    /// outside a universe are clamped into it. Returns one aggregated set
    /// per output variable, in declaration order.
    pub fn infer(&self, inputs: &[(&str, f64)]) -> Result<Vec<FuzzySet>, FuzzyError> {
        let mut crisp = vec![None; self.inputs.len()];
        for (name, x) in inputs {
            let i = self
                .input_index(name)
                .ok_or_else(|| FuzzyError::UndeclaredVariable(name.to_string()))?;
            if !x.is_finite() {
                return Err(FuzzyError::NonFinite(name.to_string()));
            }
            let v = &self.inputs[i];
            crisp[i] = Some(x.clamp(v.min, v.max));
        }
        let crisp: Vec<f64> = crisp
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| FuzzyError::MissingInput(self.inputs[i].name.clone())))
            .collect::<Result<_, _>>()?;

        let mut clips: Vec<HashMap<usize, f64>> = vec![HashMap::new(); self.outputs.len()];
        for rule in &self.rules {
            let strength = rule
                .antecedents
                .iter()
                .map(|&(v, t)| self.inputs[v].terms[t].mf.degree(crisp[v]))
                .fold(1.0, f64::min);
            for &(o, t) in &rule.consequents {
                let e = clips[o].entry(t).or_insert(0.0);
                *e = e.max(strength);
            }
        }
        Ok(self
            .outputs
            .iter()
            .zip(clips)
            .map(|(var, c)| {
                let mut clipped: Vec<(MembershipFunction, f64)> =
                    c.into_iter().map(|(t, h)| (var.terms[t].mf, h)).collect();
                clipped.sort_by(|a, b| a.0.corners()[0].total_cmp(&b.0.corners()[0]).then(a.1.total_cmp(&b.1)));
                FuzzySet {
                    min: var.min,
                    max: var.max,
                    clipped,
                }
            })
            .collect())
    }
}

/// Aggregated output: the pointwise max of terms each clipped at a height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzySet {
    pub min: f64,
    pub max: f64,
    pub clipped: Vec<(MembershipFunction, f64)>,
}

impl FuzzySet {
    pub fn new(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            clipped: Vec::new(),
        }
    }

    pub fn with(mut self, mf: MembershipFunction, height: f64) -> Self {
        self.clipped.push((mf, height));
        self
    }

    pub fn membership(&self, x: f64) -> f64 {
        self.clipped
            .iter()
            .map(|(mf, h)| mf.degree(x).min(*h))
            .fold(0.0, f64::max)
    }

    pub fn is_empty(&self) -> bool {
        self.clipped.iter().all(|(_, h)| *h <= 0.0)
    }

    /// Abscissae where the set may change slope: corners, clip crossings
    /// and pairwise crossings of the sloped edges.
    fn breakpoints(&self) -> Vec<f64> {
        // lines y = m x + q
        let mut lines: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        let mut pts = Vec::new();
        for (mf, h) in &self.clipped {
            if *h <= 0.0 {
                continue;
            }
            let [a, b, c, d] = mf.corners();
            pts.extend([a, b, c, d]);
            lines.push((0.0, h.min(1.0)));
            if b > a {
                let m = 1.0 / (b - a);
                lines.push((m, -m * a));
            }
            if d > c {
                let m = -1.0 / (d - c);
                lines.push((m, -m * d));
            }
        }
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (m1, q1) = lines[i];
                let (m2, q2) = lines[j];
                if m1 != m2 {
                    pts.push((q2 - q1) / (m1 - m2));
                }
            }
        }
        pts
    }

    /// Centroid over the universe, or `None` for an all-zero set.
    ///
    /// The integration mesh is the fixed [`CENTROID_GRID`]-point grid refined
    /// with the set's breakpoints; the set is linear between mesh points, so
    /// both integrals are exact up to rounding.
    pub fn centroid(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let n = CENTROID_GRID;
        let span = self.max - self.min;
        let mut xs: Vec<f64> = (0..n).map(|i| self.min + span * i as f64 / (n - 1) as f64).collect();
        xs.extend(
            self.breakpoints()
                .into_iter()
                .filter(|x| x.is_finite() && *x > self.min && *x < self.max),
        );
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let mut area = 0.0;
        let mut moment = 0.0;
        let mut prev = (xs[0], self.membership(xs[0]));
        for &x in &xs[1..] {
            let (x0, y0) = prev;
            let y1 = self.membership(x);
            let h = x - x0;
            area += 0.5 * h * (y0 + y1);
            moment += h / 6.0 * (x0 * (2.0 * y0 + y1) + x * (y0 + 2.0 * y1));
            prev = (x, y1);
        }
        if area <= 0.0 {
            return None;
        }
        Some((moment / area).clamp(self.min, self.max))
    }
}

pub fn defuzzify_centroid(set: &FuzzySet) -> Option<f64> {
    set.centroid()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: f64, b: f64, c: f64) -> MembershipFunction {
        MembershipFunction::triangle(a, b, c)
    }

    #[test]
    fn degree_shapes() {
        let t = tri(0.0, 1.0, 3.0);
        assert_eq!(t.degree(-1.0), 0.0);
        assert_eq!(t.degree(0.5), 0.5);
        assert_eq!(t.degree(1.0), 1.0);
        assert_eq!(t.degree(2.0), 0.5);
        assert_eq!(t.degree(3.0), 0.0);
        let shoulder = MembershipFunction::trapezoid(0.0, 0.0, 1.0, 2.0);
        assert_eq!(shoulder.degree(0.0), 1.0);
        let right = MembershipFunction::trapezoid(1.0, 2.0, 4.0, 4.0);
        assert_eq!(right.degree(4.0), 1.0);
    }

    #[test]
    fn symmetric_triangle_centroid() {
        for c in [-0.3, 0.0, 0.77, 1.5] {
            let s = FuzzySet::new(-2.0, 3.0).with(tri(c - 0.5, c, c + 0.5), 1.0);
            assert!((s.centroid().unwrap() - c).abs() < 1e-9);
            let clipped = FuzzySet::new(-2.0, 3.0).with(tri(c - 0.5, c, c + 0.5), 0.37);
            assert!((clipped.centroid().unwrap() - c).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_set_centroid_is_midpoint() {
        let s = FuzzySet::new(2.0, 6.0).with(MembershipFunction::trapezoid(2.0, 2.0, 6.0, 6.0), 0.4);
        assert!((s.centroid().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn empty_set_has_no_centroid() {
        assert_eq!(FuzzySet::new(0.0, 1.0).centroid(), None);
        assert_eq!(FuzzySet::new(0.0, 1.0).with(tri(0.0, 0.5, 1.0), 0.0).centroid(), None);
    }
}
