//! Rulebase text files.
//!
//! ```text
//! input delay 0 3000            # name, universe
//! term small trapezoid 0 0 50 500
//! term medium triangle 50 500 2000
//! output speed -0.5 2.0
//! term stop triangle -0.5 0 0.5
//! if delay is small and jitter is small then speed is fast
//! ```
//!
//! A `term` line belongs to the most recent `input` or `output`. Rules may
//! name several consequents joined by `and`.

use super::engine::{MembershipFunction, Rule, RuleBase, Term, Variable};
use super::FuzzyError;

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Input,
    Output,
}

fn err(line: usize, message: impl Into<String>) -> FuzzyError {
    FuzzyError::Parse {
        line,
        message: message.into(),
    }
}

fn num(line: usize, raw: &str) -> Result<f64, FuzzyError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("not a number: {raw:?}")))
}

pub fn parse_rulebase(text: &str) -> Result<RuleBase, FuzzyError> {
    let mut rb = RuleBase {
        inputs: Vec::new(),
        outputs: Vec::new(),
        rules: Vec::new(),
    };
    let mut current: Option<Side> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let w: Vec<&str> = body.split_whitespace().collect();
        match w[0] {
            "input" | "output" => {
                if w.len() != 4 {
                    return Err(err(line, format!("{} takes a name and two bounds", w[0])));
                }
                let var = Variable {
                    name: w[1].to_string(),
                    min: num(line, w[2])?,
                    max: num(line, w[3])?,
                    terms: Vec::new(),
                };
                if rb.inputs.iter().chain(&rb.outputs).any(|v| v.name == var.name) {
                    return Err(err(line, format!("variable {} declared twice", var.name)));
                }
                if w[0] == "input" {
                    rb.inputs.push(var);
                    current = Some(Side::Input);
                } else {
                    rb.outputs.push(var);
                    current = Some(Side::Output);
                }
            }
            "term" => {
                let var = match current {
                    Some(Side::Input) => rb.inputs.last_mut(),
                    Some(Side::Output) => rb.outputs.last_mut(),
                    None => None,
                }
                .ok_or_else(|| err(line, "term before any variable"))?;
                if w.len() < 3 {
                    return Err(err(line, "term needs a label and a shape"));
                }
                let pts = w[3..].iter().map(|r| num(line, r)).collect::<Result<Vec<_>, _>>()?;
                let mf = match (w[2], pts.as_slice()) {
                    ("triangle", &[a, b, c]) => MembershipFunction::triangle(a, b, c),
                    ("trapezoid", &[a, b, c, d]) => MembershipFunction::trapezoid(a, b, c, d),
                    (shape, _) => return Err(err(line, format!("bad shape or point count for {shape:?}"))),
                };
                if !mf.is_valid() {
                    return Err(err(line, "breakpoints must ascend"));
                }
                if var.term_index(w[1]).is_some() {
                    return Err(err(line, format!("term {} declared twice", w[1])));
                }
                var.terms.push(Term {
                    label: w[1].to_string(),
                    mf,
                });
            }
            "if" => rb.rules.push(parse_rule(&rb, line, &w[1..])?),
            other => return Err(err(line, format!("unknown directive {other:?}"))),
        }
    }
    rb.validate()?;
    Ok(rb)
}

fn parse_clauses(vars: &[Variable], line: usize, words: &[&str]) -> Result<Vec<(usize, usize)>, FuzzyError> {
    words
        .split(|w| *w == "and")
        .map(|c| match c {
            [name, "is", label] => {
                let v = vars
                    .iter()
                    .position(|v| v.name == *name)
                    .ok_or_else(|| FuzzyError::UndeclaredVariable(name.to_string()))?;
                let t = vars[v]
                    .term_index(label)
                    .ok_or_else(|| err(line, format!("{name} has no term {label}")))?;
                Ok((v, t))
            }
            _ => Err(err(line, format!("expected `<variable> is <term>`, got {:?}", c.join(" ")))),
        })
        .collect()
}

fn parse_rule(rb: &RuleBase, line: usize, words: &[&str]) -> Result<Rule, FuzzyError> {
    let split = words
        .iter()
        .position(|w| *w == "then")
        .ok_or_else(|| err(line, "rule without `then`"))?;
    Ok(Rule {
        antecedents: parse_clauses(&rb.inputs, line, &words[..split])?,
        consequents: parse_clauses(&rb.outputs, line, &words[split + 1..])?,
    })
}
