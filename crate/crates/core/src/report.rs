//! Pass/fail bookkeeping for verification runs.

use std::collections::BTreeMap;

use serde::Serialize;

/// How a check's residual is judged against its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Pass iff the residual is below the tolerance.
    Below,
    /// Pass iff the residual exceeds the tolerance (negative controls).
    Above,
    /// Recorded but never fails the run.
    ReportOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    /// Chart coordinates of the maximum, if it is attained at a node.
    pub location: Option<[f64; 2]>,
    pub tolerance: f64,
    pub expectation: Expectation,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, tolerance: f64, expectation: Expectation) -> Self {
        let mut c = Self {
            name: name.into(),
            max_residual: 0.0,
            location: None,
            tolerance,
            expectation,
            passed: true,
        };
        c.judge();
        c
    }

    pub fn below(name: impl Into<String>, tolerance: f64) -> Self {
        Self::new(name, tolerance, Expectation::Below)
    }

    pub fn above(name: impl Into<String>, tolerance: f64) -> Self {
        Self::new(name, tolerance, Expectation::Above)
    }

    pub fn report_only(name: impl Into<String>) -> Self {
        Self::new(name, f64::INFINITY, Expectation::ReportOnly)
    }

    /// A check with its residual already known.
    pub fn measured(
        name: impl Into<String>,
        residual: f64,
        location: Option<[f64; 2]>,
        tolerance: f64,
        expectation: Expectation,
    ) -> Self {
        let mut c = Self::new(name, tolerance, expectation);
        c.observe(residual, location);
        c
    }

    /// Folds one residual sample into the running maximum. NaN always wins.
    pub fn observe(&mut self, residual: f64, location: Option<[f64; 2]>) {
        if residual.is_nan() || (!self.max_residual.is_nan() && residual > self.max_residual) {
            self.max_residual = residual;
            self.location = location;
        }
        self.judge();
    }

    fn judge(&mut self) {
        let r = self.max_residual;
        self.passed = match self.expectation {
            Expectation::Below => r < self.tolerance,
            Expectation::Above => r > self.tolerance,
            Expectation::ReportOnly => true,
        };
    }

    pub fn set_tolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
        self.judge();
    }
}

/// Results of one command. Checks are kept sorted by name.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        let at = self.checks.partition_point(|c| c.name <= check.name);
        self.checks.insert(at, check);
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn extend(&mut self, other: Report) {
        for c in other.checks {
            self.push(c);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Overrides the tolerance of the check called `name`; false if absent.
    pub fn override_tolerance(&mut self, name: &str, tolerance: f64) -> bool {
        let mut hit = false;
        for c in self.checks.iter_mut() {
            if c.name == name {
                c.set_tolerance(tolerance);
                hit = true;
            }
        }
        self.passed = self.checks.iter().all(|c| c.passed);
        hit
    }
}
