//! Grid sweeps with independent, reproducible replication streams.
//!
//! Every `(grid point, replication)` pair owns the stream
//! `RandomStream::new(seed, 0).for_replication(point, rep)`, so results do not
//! depend on how the work is scheduled across threads.

use std::io::Write;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use shifttest::RandomStream;

/// Named parameter values at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub params: Vec<(String, f64)>,
}

impl Point {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
            .with_context(|| format!("grid point has no parameter `{name}`"))
    }

    /// Parameter that must hold a nonnegative integer.
    pub fn count(&self, name: &str) -> Result<usize> {
        let v = self.get(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            bail!("parameter `{name}` must be a nonnegative integer, got {v}");
        }
        Ok(v as usize)
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        Ok(self.get(name)? != 0.0)
    }
}

/// Ordered parameter axes; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid {
    pub axes: Vec<(String, Vec<f64>)>,
}

impl Grid {
    pub fn new(axes: &[(&str, &[f64])]) -> Self {
        Self {
            axes: axes.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect(),
        }
    }

    /// Replaces the values of an existing axis.
    pub fn set(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.is_empty() {
            bail!("axis `{name}` needs at least one value");
        }
        match self.axes.iter_mut().find(|(k, _)| k == name) {
            Some((_, v)) => {
                *v = values;
                Ok(())
            }
            None => {
                let known: Vec<&str> = self.axes.iter().map(|(k, _)| k.as_str()).collect();
                bail!("unknown grid parameter `{name}`; expected one of {known:?}")
            }
        }
    }

    pub fn points(&self) -> Vec<Point> {
        let mut out = vec![Point { params: Vec::new() }];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.params.push((name.clone(), v));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Outcome of one method in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub method: String,
    pub reject: bool,
    pub m_used: usize,
}

impl Trial {
    pub fn new(method: &str, reject: bool, m_used: usize) -> Self {
        Self {
            method: method.to_string(),
            reject,
            m_used,
        }
    }
}

/// Aggregate over the replications of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub point: Point,
    pub method: String,
    pub rejections: usize,
    pub replications: usize,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    pub mean_m_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub metadata: serde_json::Value,
}

impl Report {
    pub fn row(&self, method: &str, params: &[(&str, f64)]) -> Option<&Row> {
        self.rows.iter().find(|r| {
            r.method == method
                && params
                    .iter()
                    .all(|(k, v)| r.point.get(k).is_ok_and(|x| x == *v))
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if let Some(first) = self.rows.first() {
            let mut header: Vec<&str> = first.point.params.iter().map(|(k, _)| k.as_str()).collect();
            header.extend(["method", "rejection_rate", "mc_stderr", "mean_m_used", "replications"]);
            w.write_record(&header)?;
        }
        for r in &self.rows {
            let mut rec: Vec<String> = r.point.params.iter().map(|(_, v)| v.to_string()).collect();
            rec.push(r.method.clone());
            rec.push(r.rejection_rate.to_string());
            rec.push(r.mc_stderr.to_string());
            rec.push(r.mean_m_used.to_string());
            rec.push(r.replications.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `replications` independent trials at every grid point on `threads`
/// workers and aggregates them in grid order.
pub fn sweep<F>(
    experiment: &str,
    grid: &Grid,
    replications: usize,
    seed: u64,
    threads: usize,
    trial: F,
) -> Result<Report>
where
    F: Fn(&Point, RandomStream) -> Result<Vec<Trial>> + Sync,
{
    if replications == 0 {
        bail!("replications must be at least 1");
    }
    let points = grid.points();
    let root = RandomStream::new(seed, 0);
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..replications).map(move |r| (g, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("building the worker pool")?;
    let outcomes: Vec<Result<Vec<Trial>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, r)| {
                trial(&points[g], root.for_replication(g as u64, r as u64))
                    .with_context(|| format!("replication {r} at {:?}", points[g].params))
            })
            .collect()
    });
    let mut rows = Vec::new();
    for (g, point) in points.iter().enumerate() {
        let mut methods: Vec<String> = Vec::new();
        let mut tallies: Vec<(usize, usize, usize)> = Vec::new();
        for outcome in &outcomes[g * replications..(g + 1) * replications] {
            let trials = match outcome {
                Ok(t) => t,
                Err(e) => bail!("{e:#}"),
            };
            for t in trials {
                let k = match methods.iter().position(|m| *m == t.method) {
                    Some(k) => k,
                    None => {
                        methods.push(t.method.clone());
                        tallies.push((0, 0, 0));
                        methods.len() - 1
                    }
                };
                tallies[k].0 += usize::from(t.reject);
                tallies[k].1 += 1;
                tallies[k].2 += t.m_used;
            }
        }
        for (method, (rejections, count, m_total)) in methods.into_iter().zip(tallies) {
            let rate = rejections as f64 / count as f64;
            rows.push(Row {
                point: point.clone(),
                method,
                rejections,
                replications: count,
                rejection_rate: rate,
                mc_stderr: (rate * (1.0 - rate) / count as f64).sqrt(),
                mean_m_used: m_total as f64 / count as f64,
            });
        }
    }
    Ok(Report {
        experiment: experiment.to_string(),
        rows,
        metadata: serde_json::Value::Null,
    })
}
