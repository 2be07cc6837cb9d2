//! Per-tick closed-loop trace and its CSV form.
//!
//! The file starts with a version line
//! `# kdf-trace v1 n_tr=<..> n_r=<..> order=<..>`, then a header row:
//! `t, q_*, qd_*, er_*, e{s}_*, rho{s}_*, xi{s}_* (s = 1..order), u_*, dist,
//! breaches, free`. Stage-1 rotational entries of `e1` hold `η^r`; the raw
//! wrapped rotational error is in `er_*`.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{KdfError, Result};

pub const TRACE_VERSION: &str = "kdf-trace v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceLayout {
    pub n_tr: usize,
    pub n_r: usize,
    pub order: usize,
}

impl TraceLayout {
    pub fn dim(&self) -> usize {
        self.n_tr + self.n_r
    }

    pub fn columns(&self) -> Vec<String> {
        let n = self.dim();
        let mut c = vec!["t".to_string()];
        c.extend((0..n).map(|j| format!("q_{j}")));
        c.extend((0..n).map(|j| format!("qd_{j}")));
        c.extend((0..self.n_r).map(|l| format!("er_{l}")));
        for s in 1..=self.order {
            for name in ["e", "rho", "xi"] {
                c.extend((0..n).map(|j| format!("{name}{s}_{j}")));
            }
        }
        c.extend((0..n).map(|j| format!("u_{j}")));
        c.extend(["dist", "breaches", "free"].map(String::from));
        c
    }

    fn version_line(&self) -> String {
        format!(
            "# {TRACE_VERSION} n_tr={} n_r={} order={}",
            self.n_tr, self.n_r, self.order
        )
    }

    fn parse_version_line(line: &str) -> Result<Self> {
        let rest = line
            .trim()
            .strip_prefix("# ")
            .and_then(|l| l.strip_prefix(TRACE_VERSION))
            .ok_or_else(|| KdfError::Scenario(format!("not a {TRACE_VERSION} file")))?;
        let mut vals = [None; 3];
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| KdfError::Scenario(format!("bad layout token {kv:?}")))?;
            let v: usize = v
                .parse()
                .map_err(|_| KdfError::Scenario(format!("bad layout value {kv:?}")))?;
            match k {
                "n_tr" => vals[0] = Some(v),
                "n_r" => vals[1] = Some(v),
                "order" => vals[2] = Some(v),
                _ => return Err(KdfError::Scenario(format!("unknown layout key {k:?}"))),
            }
        }
        match vals {
            [Some(n_tr), Some(n_r), Some(order)] => Ok(Self { n_tr, n_r, order }),
            _ => Err(KdfError::Scenario("incomplete trace layout".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub q1: Vec<f64>,
    pub q_d: Vec<f64>,
    /// Wrapped rotational errors `e^r ∈ [-π, π)`.
    pub e_rot: Vec<f64>,
    /// Per stage; stage 1 is `[e^t.., η^r..]`.
    pub e: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    /// Obstacle clearance `D(t)` in metres.
    pub dist: f64,
    pub breaches: usize,
    pub free: bool,
}

impl TraceRecord {
    fn row(&self) -> Vec<String> {
        let mut r = vec![self.t.to_string()];
        let push = |r: &mut Vec<String>, v: &[f64]| r.extend(v.iter().map(|x| x.to_string()));
        push(&mut r, &self.q1);
        push(&mut r, &self.q_d);
        push(&mut r, &self.e_rot);
        for s in 0..self.e.len() {
            push(&mut r, &self.e[s]);
            push(&mut r, &self.rho[s]);
            push(&mut r, &self.xi[s]);
        }
        push(&mut r, &self.u);
        r.push(self.dist.to_string());
        r.push(self.breaches.to_string());
        r.push(u8::from(self.free).to_string());
        r
    }

    fn parse(layout: &TraceLayout, rec: &csv::StringRecord) -> Result<Self> {
        let cols = layout.columns().len();
        if rec.len() != cols {
            return Err(KdfError::Scenario(format!(
                "trace row has {} fields, layout needs {cols}",
                rec.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| KdfError::Scenario(format!("bad number {:?}", &rec[i])))
        };
        let n = layout.dim();
        let mut at = 0usize;
        let mut take = |k: usize| -> Result<Vec<f64>> {
            let v = (at..at + k).map(num).collect::<Result<Vec<_>>>();
            at += k;
            v
        };
        let t = take(1)?[0];
        let q1 = take(n)?;
        let q_d = take(n)?;
        let e_rot = take(layout.n_r)?;
        let (mut e, mut rho, mut xi) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..layout.order {
            e.push(take(n)?);
            rho.push(take(n)?);
            xi.push(take(n)?);
        }
        let u = take(n)?;
        let tail = take(3)?;
        Ok(Self {
            t,
            q1,
            q_d,
            e_rot,
            e,
            rho,
            xi,
            u,
            dist: tail[0],
            breaches: tail[1] as usize,
            free: tail[2] != 0.0,
        })
    }
}

pub fn write_trace<W: Write>(
    mut out: W,
    layout: &TraceLayout,
    records: &[TraceRecord],
) -> Result<()> {
    writeln!(out, "{}", layout.version_line())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(layout.columns())?;
    for r in records {
        w.write_record(r.row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<(TraceLayout, Vec<TraceRecord>)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let layout = TraceLayout::parse_version_line(&first)?;
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(String::from).collect();
    if header != layout.columns() {
        return Err(KdfError::Scenario(
            "trace header does not match its layout".into(),
        ));
    }
    let mut records = Vec::new();
    for rec in csv.records() {
        records.push(TraceRecord::parse(&layout, &rec?)?);
    }
    Ok((layout, records))
}

/// Offline invariant report for a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck {
    pub ticks: usize,
    pub monotone: bool,
    /// Ticks where some funnel was not strictly respected.
    pub containment_violations: Vec<f64>,
    /// Largest `|ξ - e/ρ|` over the run.
    pub xi_residual: f64,
    pub max_abs_xi: f64,
    pub collisions: usize,
    pub min_dist: f64,
    /// Ticks where some rotational error sat at `±π`.
    pub rot_singular: usize,
    pub u_finite: bool,
}

impl TraceCheck {
    /// Containment violations outside the given windows.
    pub fn violations_outside(&self, windows: &[(f64, f64)]) -> usize {
        self.containment_violations
            .iter()
            .filter(|&&t| !windows.iter().any(|&(a, b)| t >= a && t <= b))
            .count()
    }

    pub fn is_clean(&self, windows: &[(f64, f64)]) -> bool {
        self.monotone
            && self.violations_outside(windows) == 0
            && self.xi_residual <= 1e-9
            && self.collisions == 0
            && self.rot_singular == 0
            && self.u_finite
    }
}

pub fn check_trace(layout: &TraceLayout, records: &[TraceRecord]) -> TraceCheck {
    let mut c = TraceCheck {
        ticks: records.len(),
        monotone: true,
        containment_violations: Vec::new(),
        xi_residual: 0.0,
        max_abs_xi: 0.0,
        collisions: 0,
        min_dist: f64::INFINITY,
        rot_singular: 0,
        u_finite: true,
    };
    let mut prev = f64::NEG_INFINITY;
    for r in records {
        if !(r.t > prev) {
            c.monotone = false;
        }
        prev = r.t;
        let mut inside = true;
        for (s, ((e, rho), xi)) in r.e.iter().zip(&r.rho).zip(&r.xi).enumerate() {
            for j in 0..e.len() {
                let rot = s == 0 && j >= layout.n_tr;
                let ok = if rot {
                    e[j] >= 0.0 && e[j] < rho[j]
                } else {
                    e[j].abs() < rho[j]
                };
                inside &= ok;
                let scale = xi[j].abs().max(1.0);
                c.xi_residual = c.xi_residual.max((xi[j] - e[j] / rho[j]).abs() / scale);
                c.max_abs_xi = c.max_abs_xi.max(xi[j].abs());
            }
        }
        if !inside {
            c.containment_violations.push(r.t);
        }
        if !r.free {
            c.collisions += 1;
        }
        c.min_dist = c.min_dist.min(r.dist);
        if r.e_rot
            .iter()
            .any(|e| (e.abs() - std::f64::consts::PI).abs() < 1e-12)
        {
            c.rot_singular += 1;
        }
        if r.u.iter().any(|u| !u.is_finite()) {
            c.u_finite = false;
        }
    }
    c
}
