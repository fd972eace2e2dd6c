//! Text profile files.
//!
//! ```text
//! # size  min  avg  max   (bytes, ms)
//! row 100   79  103  189
//! row 500   99  129  229
//! loss 0.01
//! reorder 0.0
//! seed 7
//! media_pipeline_ms 1745
//! interrupt 10000 10000     # start_ms duration_ms
//! ```
//!
//! A file without `row` lines keeps the built-in delay table.

use std::str::FromStr;

use super::{DelayProfile, DelayRow, NetsimError};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFile {
    pub profile: DelayProfile,
    /// `(start_ms, duration_ms)` pairs.
    pub interruptions: Vec<(u64, u64)>,
}

impl FromStr for ProfileFile {
    type Err = NetsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_profile(s)
    }
}

fn value<T: FromStr>(line: usize, raw: &str) -> Result<T, NetsimError> {
    raw.parse().map_err(|_| NetsimError::Parse {
        line,
        message: format!("bad value {raw:?}"),
    })
}

pub fn parse_profile(text: &str) -> Result<ProfileFile, NetsimError> {
    let mut profile = DelayProfile::field_trial();
    let mut rows = Vec::new();
    let mut interruptions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        let want = |n: usize| {
            if f.len() == n + 1 {
                Ok(())
            } else {
                Err(NetsimError::Parse {
                    line,
                    message: format!("{} takes {n} values", f[0]),
                })
            }
        };
        match f[0] {
            "row" => {
                want(4)?;
                rows.push(DelayRow::new(
                    value(line, f[1])?,
                    value(line, f[2])?,
                    value(line, f[3])?,
                    value(line, f[4])?,
                ));
            }
            "loss" => {
                want(1)?;
                profile.loss_rate = value(line, f[1])?;
            }
            "reorder" => {
                want(1)?;
                profile.reorder_rate = value(line, f[1])?;
            }
            "seed" => {
                want(1)?;
                profile.seed = value(line, f[1])?;
            }
            "media_pipeline_ms" => {
                want(1)?;
                profile.media_pipeline_ms = value(line, f[1])?;
            }
            "interrupt" => {
                want(2)?;
                interruptions.push((value(line, f[1])?, value(line, f[2])?));
            }
            other => {
                return Err(NetsimError::Parse {
                    line,
                    message: format!("unknown directive {other:?}"),
                })
            }
        }
    }
    if !rows.is_empty() {
        profile.rows = rows;
    }
    profile.validate()?;
    Ok(ProfileFile { profile, interruptions })
}

impl ProfileFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.profile.rows {
            s.push_str(&format!("row {} {} {} {}\n", r.size_bytes, r.min_ms, r.avg_ms, r.max_ms));
        }
        s.push_str(&format!("loss {}\n", self.profile.loss_rate));
        s.push_str(&format!("reorder {}\n", self.profile.reorder_rate));
        s.push_str(&format!("seed {}\n", self.profile.seed));
        s.push_str(&format!("media_pipeline_ms {}\n", self.profile.media_pipeline_ms));
        for (a, d) in &self.interruptions {
            s.push_str(&format!("interrupt {a} {d}\n"));
        }
        s
    }
}
