use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::{Duration, Instant};

use aglab_core::report::Margin;
use aglab_core::{Error, Report, Result};
use num_traits::Zero;
use serde_json::{json, Value};

use crate::args::Cli;

#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Violations,
}

/// Report sink that stamps every line with the run configuration and keeps tallies.
pub struct Sink {
    out: Box<dyn Write>,
    config: Value,
    verbose: bool,
    /// Print every report even when not verbose, for single-instance runs.
    pub single: bool,
    deadline: Option<Instant>,
    items: u64,
    failed: u64,
    unmet: u64,
    equalities: u64,
}

impl Sink {
    pub fn new(cli: &Cli) -> Result<Sink> {
        let out: Box<dyn Write> =
            match &cli.output {
                Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                    Error::Parse(format!("cannot create {}: {e}", path.display()))
                })?)),
                None => Box::new(BufWriter::new(io::stdout())),
            };
        Ok(Sink {
            out,
            config: serde_json::to_value(cli).expect("arguments serialize"),
            verbose: cli.verbose,
            single: false,
            deadline: cli
                .budget_seconds
                .map(|s| Instant::now() + Duration::from_secs_f64(s)),
            items: 0,
            failed: 0,
            unmet: 0,
            equalities: 0,
        })
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn check_time(&self) -> Result<()> {
        if self.deadline.is_some_and(|d| Instant::now() > d) {
            return Err(Error::Budget(format!(
                "time budget exhausted after {} items",
                self.items
            )));
        }
        Ok(())
    }

    pub fn line(&mut self, mut v: Value) -> Result<()> {
        v["config"] = self.config.clone();
        writeln!(self.out, "{v}").map_err(|e| Error::Parse(format!("cannot write report: {e}")))
    }

    /// Writes a non-report document, such as a constructed family.
    pub fn document(&mut self, v: &Value) -> Result<()> {
        writeln!(self.out, "{v}").map_err(|e| Error::Parse(format!("cannot write output: {e}")))
    }

    /// Tallies a report, printing it when it failed or when verbose.
    pub fn report(&mut self, item: Value, r: Report) -> Result<()> {
        self.check_time()?;
        self.items += 1;
        let met = r.hypotheses_met();
        self.unmet += u64::from(!met);
        self.failed += u64::from(!r.pass);
        self.equalities += u64::from(matches!(&r.margin, Margin::Exact(x) if x.is_zero()));
        if self.verbose || !r.pass || self.single {
            let mut v = serde_json::to_value(&r).expect("reports serialize");
            v["params"]["item"] = item;
            self.line(v)?;
        }
        Ok(())
    }

    /// Emits the summary line and the exit status.
    pub fn finish(&mut self, check: &str, extra: Value) -> Result<Outcome> {
        let mut summary = json!({
            "items": self.items,
            "failed": self.failed,
            "hypotheses_unmet": self.unmet,
            "exact_equalities": self.equalities,
        });
        if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
            s.extend(e);
        }
        let pass = self.failed == 0;
        self.line(json!({ "check": check, "summary": summary, "pass": pass }))?;
        self.out
            .flush()
            .map_err(|e| Error::Parse(format!("cannot write report: {e}")))?;
        Ok(if pass {
            Outcome::Clean
        } else {
            Outcome::Violations
        })
    }
}
