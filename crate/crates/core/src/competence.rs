//! Competence schedules: the fraction of the difficulty-ranked corpus the
//! learner may sample from at a given step.
//!
//! Both families start at `c0` for step zero and reach exactly `1.0` at step
//! `duration`, after which training is indistinguishable from uniform
//! sampling over the whole corpus.

use std::fmt;
use std::io::Write;

use crate::{Error, Result};

/// `min(1, t (1 - c0) / T + c0)`.
pub fn competence_linear(t: u64, c0: f64, duration: u64) -> f64 {
    if t >= duration {
        return 1.0;
    }
    (t as f64 * (1.0 - c0) / duration as f64 + c0).clamp(c0, 1.0)
}

/// `min(1, (t (1 - c0^p) / T + c0^p)^(1/p))`; `p = 2` is the square-root
/// schedule and `p = 1` coincides with [`competence_linear`].
pub fn competence_root_p(t: u64, c0: f64, duration: u64, p: f64) -> f64 {
    if t >= duration {
        return 1.0;
    }
    let c0p = c0.powf(p);
    (t as f64 * (1.0 - c0p) / duration as f64 + c0p)
        .powf(p.recip())
        .clamp(c0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Linear,
    Root { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetenceSchedule {
    kind: ScheduleKind,
    initial: f64,
    duration: u64,
}

impl CompetenceSchedule {
    pub fn new(kind: ScheduleKind, initial: f64, duration: u64) -> Result<Self> {
        if !(initial > 0.0 && initial <= 1.0) {
            return Err(Error::param(format!(
                "initial competence must be in (0, 1], got {initial}"
            )));
        }
        if duration == 0 {
            return Err(Error::param("curriculum length must be at least 1 step"));
        }
        if let ScheduleKind::Root { p } = kind {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::param(format!("root exponent must be >= 1, got {p}")));
            }
        }
        Ok(Self {
            kind,
            initial,
            duration,
        })
    }

    pub fn linear(initial: f64, duration: u64) -> Result<Self> {
        Self::new(ScheduleKind::Linear, initial, duration)
    }

    pub fn sqrt(initial: f64, duration: u64) -> Result<Self> {
        Self::root(initial, duration, 2.0)
    }

    pub fn root(initial: f64, duration: u64, p: f64) -> Result<Self> {
        Self::new(ScheduleKind::Root { p }, initial, duration)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn at(&self, t: u64) -> f64 {
        match self.kind {
            ScheduleKind::Linear => competence_linear(t, self.initial, self.duration),
            ScheduleKind::Root { p } => competence_root_p(t, self.initial, self.duration, p),
        }
    }

    /// `linear`, `sqrt`, or `root-<p>`.
    pub fn name(&self) -> String {
        match self.kind {
            ScheduleKind::Linear => "linear".to_owned(),
            ScheduleKind::Root { p: 2.0 } => "sqrt".to_owned(),
            ScheduleKind::Root { p } => format!("root-{p}"),
        }
    }
}

impl fmt::Display for CompetenceSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(c0={}, T={})",
            self.name(),
            self.initial,
            self.duration
        )
    }
}

/// `(t, c(t))` rows for a family of schedules at integer steps `0..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub names: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl CurveTable {
    pub fn column(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |(_, v)| v[index])
    }

    /// CSV with header `t,<name>...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,{}", self.names.join(","))?;
        for (t, values) in &self.rows {
            write!(out, "{t}")?;
            for v in values {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn plot_schedules(schedules: &[CompetenceSchedule], t_max: u64) -> Result<CurveTable> {
    if schedules.is_empty() {
        return Err(Error::param("at least one schedule is required"));
    }
    let names = schedules.iter().map(CompetenceSchedule::name).collect();
    let rows = (0..=t_max)
        .map(|t| (t, schedules.iter().map(|s| s.at(t)).collect()))
        .collect();
    Ok(CurveTable { names, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_by_hand() {
        assert_eq!(competence_linear(0, 0.01, 1000), 0.01);
        assert!((competence_linear(500, 0.01, 1000) - 0.505).abs() < 1e-12);
        assert_eq!(competence_linear(1000, 0.01, 1000), 1.0);
        assert_eq!(competence_linear(2000, 0.01, 1000), 1.0);
    }

    #[test]
    fn sqrt_by_hand() {
        assert!((competence_root_p(250, 0.01, 1000, 2.0) - 0.500075).abs() < 1e-6);
        assert!((competence_root_p(0, 0.01, 1000, 2.0) - 0.01).abs() < 1e-15);
        assert_eq!(competence_root_p(1000, 0.01, 1000, 2.0), 1.0);
    }

    #[test]
    fn root_one_is_linear() {
        for t in 0..=1200 {
            assert_eq!(
                competence_root_p(t, 0.01, 1000, 1.0).to_bits(),
                competence_linear(t, 0.01, 1000).to_bits()
            );
        }
    }

    #[test]
    fn sharper_root_is_larger_early() {
        assert!(competence_root_p(500, 0.01, 1000, 5.0) > competence_root_p(500, 0.01, 1000, 2.0));
    }

    #[test]
    fn validates_parameters() {
        assert!(CompetenceSchedule::linear(0.0, 10).is_err());
        assert!(CompetenceSchedule::linear(1.5, 10).is_err());
        assert!(CompetenceSchedule::linear(0.5, 0).is_err());
        assert!(CompetenceSchedule::root(0.5, 10, 0.5).is_err());
        assert!(CompetenceSchedule::root(0.5, 10, f64::NAN).is_err());
        assert!(CompetenceSchedule::root(0.5, 10, 2.5).is_ok());
        assert!(CompetenceSchedule::linear(1.0, 1).is_ok());
    }

    #[test]
    fn names() {
        assert_eq!(
            CompetenceSchedule::linear(0.01, 10).unwrap().name(),
            "linear"
        );
        assert_eq!(CompetenceSchedule::sqrt(0.01, 10).unwrap().name(), "sqrt");
        assert_eq!(
            CompetenceSchedule::root(0.01, 10, 5.0).unwrap().name(),
            "root-5"
        );
        assert_eq!(
            CompetenceSchedule::root(0.01, 10, 2.5).unwrap().name(),
            "root-2.5"
        );
    }

    #[test]
    fn sqrt_dominates_linear_inside_curriculum() {
        let family = [
            CompetenceSchedule::linear(0.01, 1000).unwrap(),
            CompetenceSchedule::sqrt(0.01, 1000).unwrap(),
        ];
        let table = plot_schedules(&family, 1000).unwrap();
        assert_eq!(table.names, ["linear", "sqrt"]);
        assert_eq!(table.rows.len(), 1001);
        for (t, v) in &table.rows[1..1000] {
            assert!(v[1] > v[0], "t={t}");
        }
    }

    #[test]
    fn zero_axis_is_single_row() {
        let table = plot_schedules(&[CompetenceSchedule::linear(0.01, 1000).unwrap()], 0).unwrap();
        assert_eq!(table.rows, [(0, vec![0.01])]);
        assert!(plot_schedules(&[], 10).is_err());
    }

    #[test]
    fn csv_layout() {
        let table = plot_schedules(&[CompetenceSchedule::linear(0.5, 2).unwrap()], 2).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,linear\n0,0.5\n1,0.75\n2,1\n"
        );
    }
}
