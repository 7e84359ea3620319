//! Running real candidate algorithms under the derived-algorithm policy.
//!
//! Stages run one after another. Stage `i < N` gets `τ_i` seconds of its own
//! and is abandoned when it has not finished by then; the last stage runs
//! without a limit. The model clock charges an abandoned stage exactly `τ_i`;
//! the measured wall clock, including cancellation latency, is kept next to it.

use std::collections::HashMap;
use std::io::Read;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mle::TimingSamples;
use crate::schedule::Schedule;

/// A problem instance. `input` is what the runner sees; `id` labels records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub input: String,
}

impl Task {
    pub fn new(id: impl Into<String>, input: impl Into<String>) -> Self {
        Task { id: id.into(), input: input.into() }
    }

    /// A task whose id is its input.
    pub fn named(input: impl Into<String>) -> Self {
        let input = input.into();
        Task { id: input.clone(), input }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StageOutcome {
    Completed { output: String, elapsed: Duration },
    Abandoned { elapsed: Duration },
}

/// Why a runner produced no outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunnerError {
    /// The runner refuses this task; a caller error.
    Rejected(String),
    Crashed(String),
}

/// One algorithm of a portfolio.
pub trait Candidate: Send + Sync {
    fn id(&self) -> &str;

    /// Runs `task`, abandoning it once `budget` has elapsed.
    fn run(&self, task: &Task, budget: Option<Duration>) -> Result<StageOutcome, RunnerError>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub id: String,
    /// Seconds; `None` for the unbounded last stage.
    pub budget: Option<f64>,
    /// Measured seconds.
    pub elapsed: f64,
    pub abandoned: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub task_id: String,
    /// 1-based; `None` while no stage has completed.
    pub completing_index: Option<usize>,
    pub completing_id: Option<String>,
    /// Measured wall-clock seconds over all stages.
    pub elapsed: f64,
    /// Abandoned budgets plus the completing stage's measured time.
    pub model_time: f64,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedRun {
    pub record: RunRecord,
    pub output: String,
}

pub fn run_derived(portfolio: &[&dyn Candidate], schedule: &Schedule, task: &Task) -> Result<DerivedRun> {
    if portfolio.is_empty() {
        return Err(Error::Contract("empty portfolio".into()));
    }
    if schedule.portfolio_size() != portfolio.len() {
        return Err(Error::Contract(format!(
            "{} algorithms need {} budgets, schedule has {}",
            portfolio.len(),
            portfolio.len() - 1,
            schedule.budgets().len()
        )));
    }
    let start = Instant::now();
    let mut record = RunRecord {
        task_id: task.id.clone(),
        completing_index: None,
        completing_id: None,
        elapsed: 0.0,
        model_time: 0.0,
        stages: Vec::with_capacity(portfolio.len()),
    };
    for (i, cand) in portfolio.iter().enumerate() {
        let budget = schedule.budgets().get(i).copied();
        let outcome = cand.run(task, budget.map(Duration::from_secs_f64));
        record.elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(StageOutcome::Completed { output, elapsed }) => {
                let elapsed = elapsed.as_secs_f64();
                record.stages.push(StageRecord { id: cand.id().into(), budget, elapsed, abandoned: false });
                record.model_time += elapsed;
                record.completing_index = Some(i + 1);
                record.completing_id = Some(cand.id().into());
                return Ok(DerivedRun { record, output });
            }
            Ok(StageOutcome::Abandoned { elapsed }) => {
                let Some(tau) = budget else {
                    return Err(Error::StageFailed {
                        index: i + 1,
                        id: cand.id().into(),
                        message: "unbounded stage reported abandonment".into(),
                        partial: Box::new(record),
                    });
                };
                log::debug!("task {}: abandoned {} after {:.3}s", task.id, cand.id(), elapsed.as_secs_f64());
                record.stages.push(StageRecord {
                    id: cand.id().into(),
                    budget,
                    elapsed: elapsed.as_secs_f64(),
                    abandoned: true,
                });
                record.model_time += tau;
            }
            Err(RunnerError::Rejected(m)) => {
                return Err(Error::Contract(format!("{} rejected task {}: {m}", cand.id(), task.id)));
            }
            Err(RunnerError::Crashed(message)) => {
                return Err(Error::StageFailed { index: i + 1, id: cand.id().into(), message, partial: Box::new(record) });
            }
        }
    }
    unreachable!("the last stage has no budget and either completes or fails")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileConfig {
    /// Runs longer than this are abandoned and the task excluded.
    pub safety_cap: Duration,
    /// Run tasks concurrently; only sound for interference-free runners.
    pub parallel: bool,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig { safety_cap: Duration::from_millis(1_000_000), parallel: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub task_id: String,
    pub candidate: String,
    pub reason: String,
}

/// Seconds per algorithm for every task on which all algorithms finished.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    pub candidates: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    pub excluded: Vec<Exclusion>,
}

impl ProfileReport {
    /// The joint sample for a two-algorithm portfolio.
    pub fn samples(&self) -> Result<TimingSamples> {
        if self.candidates.len() != 2 {
            return Err(Error::Contract(format!(
                "timing pairs need exactly 2 algorithms, profile has {}",
                self.candidates.len()
            )));
        }
        let pairs = self.rows.iter().map(|(_, t)| (t[0], t[1])).collect();
        let ids = self.rows.iter().map(|(id, _)| id.clone()).collect();
        TimingSamples::with_ids(pairs, ids)
    }
}

// The clock can read zero for very fast commands; recorded times stay positive.
const MIN_RECORDED: f64 = 1e-9;

/// Runs every algorithm to completion on every task, in task order.
pub fn profile(portfolio: &[&dyn Candidate], tasks: &[Task], cfg: &ProfileConfig) -> Result<ProfileReport> {
    if portfolio.is_empty() {
        return Err(Error::Contract("empty portfolio".into()));
    }
    let time_task = |task: &Task| -> Result<Vec<f64>, Exclusion> {
        let mut row = Vec::with_capacity(portfolio.len());
        for cand in portfolio {
            let exclude = |reason: String| Exclusion { task_id: task.id.clone(), candidate: cand.id().into(), reason };
            match cand.run(task, Some(cfg.safety_cap)) {
                Ok(StageOutcome::Completed { elapsed, .. }) => row.push(elapsed.as_secs_f64().max(MIN_RECORDED)),
                Ok(StageOutcome::Abandoned { .. }) => {
                    return Err(exclude(format!("exceeded the {:?} safety cap", cfg.safety_cap)))
                }
                Err(RunnerError::Rejected(m)) => return Err(exclude(format!("rejected: {m}"))),
                Err(RunnerError::Crashed(m)) => return Err(exclude(format!("crashed: {m}"))),
            }
        }
        Ok(row)
    };
    let results: Vec<_> = if cfg.parallel {
        tasks.par_iter().map(time_task).collect()
    } else {
        tasks.iter().map(time_task).collect()
    };
    let mut report = ProfileReport {
        candidates: portfolio.iter().map(|c| c.id().to_string()).collect(),
        rows: Vec::new(),
        excluded: Vec::new(),
    };
    for (task, r) in tasks.iter().zip(results) {
        match r {
            Ok(row) => report.rows.push((task.id.clone(), row)),
            Err(ex) => {
                log::warn!("excluding task {} ({}): {}", ex.task_id, ex.candidate, ex.reason);
                report.excluded.push(ex);
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub task_id: String,
    /// `(candidate, output or error text)` for every algorithm.
    pub outputs: Vec<(String, String)>,
}

/// Tasks on which the algorithms do not all produce the same output.
pub fn verify_equivalence(portfolio: &[&dyn Candidate], tasks: &[Task]) -> Vec<Mismatch> {
    let mut report = Vec::new();
    for task in tasks {
        let outputs: Vec<(String, String)> = portfolio
            .iter()
            .map(|c| {
                let text = match c.run(task, None) {
                    Ok(StageOutcome::Completed { output, .. }) => output,
                    Ok(StageOutcome::Abandoned { .. }) => "<abandoned>".into(),
                    Err(RunnerError::Rejected(m)) => format!("<rejected: {m}>"),
                    Err(RunnerError::Crashed(m)) => format!("<crashed: {m}>"),
                };
                (c.id().to_string(), text)
            })
            .collect();
        if outputs.windows(2).any(|w| w[0].1 != w[1].1) {
            report.push(Mismatch { task_id: task.id.clone(), outputs });
        }
    }
    report
}

/// Cooperative cancellation flag handed to in-process runners.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }

    fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    /// Sleeps for `d` unless cancelled first; returns whether the full sleep happened.
    pub fn sleep(&self, d: Duration) -> bool {
        let end = Instant::now() + d;
        loop {
            if self.is_cancelled() {
                return false;
            }
            let now = Instant::now();
            if now >= end {
                return true;
            }
            thread::sleep((end - now).min(Duration::from_millis(2)));
        }
    }
}

type RunnerFn = dyn Fn(&Task, &CancelToken) -> Result<String, RunnerError> + Send + Sync;

/// In-process runner on its own thread. At the deadline the token is
/// cancelled and the thread is detached; it no longer counts toward the clock.
#[derive(Clone)]
pub struct FnCandidate {
    id: String,
    f: Arc<RunnerFn>,
}

impl FnCandidate {
    pub fn new(
        id: impl Into<String>,
        f: impl Fn(&Task, &CancelToken) -> Result<String, RunnerError> + Send + Sync + 'static,
    ) -> Self {
        FnCandidate { id: id.into(), f: Arc::new(f) }
    }
}

impl Candidate for FnCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, task: &Task, budget: Option<Duration>) -> Result<StageOutcome, RunnerError> {
        let (tx, rx) = mpsc::channel();
        let token = CancelToken::default();
        let (f, t, tok) = (Arc::clone(&self.f), task.clone(), token.clone());
        let start = Instant::now();
        thread::spawn(move || {
            let _ = tx.send(f(&t, &tok));
        });
        let received = match budget {
            Some(b) => rx.recv_timeout(b),
            None => rx.recv().map_err(|_| mpsc::RecvTimeoutError::Disconnected),
        };
        match received {
            Ok(Ok(output)) => Ok(StageOutcome::Completed { output, elapsed: start.elapsed() }),
            Ok(Err(e)) => Err(e),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                token.cancel();
                Ok(StageOutcome::Abandoned { elapsed: start.elapsed() })
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(RunnerError::Crashed("runner panicked".into())),
        }
    }
}

/// Runner with programmed durations and no real waiting: a task finishes
/// after its programmed time if that is within budget, else is abandoned at the budget.
#[derive(Clone, Debug)]
pub struct SimulatedCandidate {
    id: String,
    durations: HashMap<String, f64>,
}

impl SimulatedCandidate {
    /// `durations` maps task ids to seconds.
    pub fn new(id: impl Into<String>, durations: HashMap<String, f64>) -> Self {
        SimulatedCandidate { id: id.into(), durations }
    }
}

impl Candidate for SimulatedCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, task: &Task, budget: Option<Duration>) -> Result<StageOutcome, RunnerError> {
        let &secs = self
            .durations
            .get(&task.id)
            .ok_or_else(|| RunnerError::Rejected(format!("no programmed duration for task {}", task.id)))?;
        match budget {
            Some(b) if secs > b.as_secs_f64() => Ok(StageOutcome::Abandoned { elapsed: b }),
            _ => Ok(StageOutcome::Completed { output: task.input.clone(), elapsed: Duration::from_secs_f64(secs) }),
        }
    }
}

/// How a command's standard output becomes the task result.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ParseRule {
    /// Whole output with surrounding whitespace removed.
    #[default]
    Trimmed,
    LastLine,
    /// First capture group of the first match, or the whole match without groups.
    Regex { pattern: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandSpec {
    pub id: String,
    /// Program and arguments; every `{task}` is replaced by the task input.
    pub command: Vec<String>,
    #[serde(default)]
    pub parse: ParseRule,
}

/// Portfolio described as external commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub candidates: Vec<CommandSpec>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.candidates.is_empty() {
            return Err(Error::Parse("manifest lists no candidates".into()));
        }
        Ok(m)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn candidates(&self) -> Result<Vec<CommandCandidate>> {
        self.candidates.iter().cloned().map(CommandCandidate::new).collect()
    }
}

const POLL: Duration = Duration::from_millis(1);

pub struct CommandCandidate {
    spec: CommandSpec,
    regex: Option<Regex>,
}

impl CommandCandidate {
    pub fn new(spec: CommandSpec) -> Result<Self> {
        if spec.command.is_empty() {
            return Err(Error::Parse(format!("candidate {}: empty command", spec.id)));
        }
        let regex = match &spec.parse {
            ParseRule::Regex { pattern } => Some(
                Regex::new(pattern).map_err(|e| Error::Parse(format!("candidate {}: {e}", spec.id)))?,
            ),
            _ => None,
        };
        Ok(CommandCandidate { spec, regex })
    }

    fn parse(&self, stdout: &str) -> Result<String, RunnerError> {
        match &self.spec.parse {
            ParseRule::Trimmed => Ok(stdout.trim().to_string()),
            ParseRule::LastLine => Ok(stdout.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").trim().into()),
            ParseRule::Regex { pattern } => {
                let caps = self
                    .regex
                    .as_ref()
                    .and_then(|r| r.captures(stdout))
                    .ok_or_else(|| RunnerError::Crashed(format!("output does not match /{pattern}/")))?;
                Ok(caps.get(1).or_else(|| caps.get(0)).map_or("", |m| m.as_str()).to_string())
            }
        }
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = String::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_string(&mut buf);
        }
        buf
    })
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

impl Candidate for CommandCandidate {
    fn id(&self) -> &str {
        &self.spec.id
    }

    fn run(&self, task: &Task, budget: Option<Duration>) -> Result<StageOutcome, RunnerError> {
        let argv: Vec<String> = self.spec.command.iter().map(|a| a.replace("{task}", &task.input)).collect();
        let start = Instant::now();
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| RunnerError::Rejected(format!("cannot start {}: {e}", argv[0])))?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {}
                Err(e) => {
                    kill(&mut child);
                    return Err(RunnerError::Crashed(e.to_string()));
                }
            }
            if let Some(b) = budget {
                let used = start.elapsed();
                if used >= b {
                    kill(&mut child);
                    // Readers are detached; a grandchild may still hold the pipes.
                    return Ok(StageOutcome::Abandoned { elapsed: start.elapsed() });
                }
                thread::sleep(POLL.min(b - used));
            } else {
                thread::sleep(POLL);
            }
        };
        let elapsed = start.elapsed();
        let stdout = out.join().unwrap_or_default();
        if !status.success() {
            let stderr = err.join().unwrap_or_default();
            return Err(RunnerError::Crashed(format!("{status}: {}", stderr.trim())));
        }
        Ok(StageOutcome::Completed { output: self.parse(&stdout)?, elapsed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(id: &str, secs: &[(&str, f64)]) -> SimulatedCandidate {
        SimulatedCandidate::new(id, secs.iter().map(|(t, s)| (t.to_string(), *s)).collect())
    }

    #[test]
    fn simulated_branches() {
        let a = sim("a", &[("t", 2.0)]);
        let b = sim("b", &[("t", 5.0)]);
        let task = Task::named("t");
        let s = Schedule::single(3.0).unwrap();
        let r = run_derived(&[&a, &b], &s, &task).unwrap();
        assert_eq!((r.record.completing_index, r.record.model_time), (Some(1), 2.0));
        let r = run_derived(&[&b, &a], &Schedule::single(1.0).unwrap(), &task).unwrap();
        assert_eq!((r.record.completing_index, r.record.model_time), (Some(2), 3.0));
        assert!(r.record.stages[0].abandoned);
        let r = run_derived(&[&b], &Schedule::new(vec![]).unwrap(), &task).unwrap();
        assert_eq!(r.record.model_time, 5.0);
    }

    #[test]
    fn schedule_length_checked() {
        let a = sim("a", &[("t", 1.0)]);
        let e = run_derived(&[&a, &a], &Schedule::new(vec![]).unwrap(), &Task::named("t"));
        assert!(matches!(e, Err(Error::Contract(_))));
        assert!(matches!(run_derived(&[], &Schedule::new(vec![]).unwrap(), &Task::named("t")), Err(Error::Contract(_))));
    }

    #[test]
    fn crash_keeps_partial_record() {
        let slow = sim("slow", &[("t", 9.0)]);
        let bad = FnCandidate::new("bad", |_, _| Err(RunnerError::Crashed("boom".into())));
        match run_derived(&[&slow, &bad], &Schedule::single(1.0).unwrap(), &Task::named("t")) {
            Err(Error::StageFailed { index: 2, partial, .. }) => assert_eq!(partial.stages.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fn_candidate_is_abandoned_at_deadline() {
        let c = FnCandidate::new("sleepy", |_, tok| {
            tok.sleep(Duration::from_secs(5));
            Ok("late".into())
        });
        let out = c.run(&Task::named("t"), Some(Duration::from_millis(20))).unwrap();
        match out {
            StageOutcome::Abandoned { elapsed } => assert!(elapsed < Duration::from_millis(70)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn profile_excludes_failures() {
        let a = sim("a", &[("1", 1.0), ("2", 2.0), ("3", 3.0)]);
        let b = sim("b", &[("1", 2.0), ("3", 1.0)]);
        let tasks: Vec<Task> = ["1", "2", "3"].into_iter().map(Task::named).collect();
        let rep = profile(&[&a, &b], &tasks, &ProfileConfig::default()).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.excluded[0].task_id, "2");
        assert_eq!(rep.samples().unwrap().pairs(), &[(1.0, 2.0), (3.0, 1.0)]);
    }

    #[test]
    fn equivalence_report() {
        let good = FnCandidate::new("up", |t, _| Ok(t.input.to_uppercase()));
        let same = FnCandidate::new("up2", |t, _| Ok(t.input.to_ascii_uppercase()));
        let broken = FnCandidate::new("bad", |t, _| Ok(if t.input == "b" { "X".into() } else { t.input.to_uppercase() }));
        let tasks: Vec<Task> = ["a", "b", "c"].into_iter().map(Task::named).collect();
        assert!(verify_equivalence(&[&good, &same], &tasks).is_empty());
        let bad = verify_equivalence(&[&good, &broken], &tasks);
        assert_eq!(bad.iter().map(|m| m.task_id.as_str()).collect::<Vec<_>>(), vec!["b"]);
        assert!(verify_equivalence(&[&good, &broken], &[]).is_empty());
    }

    #[cfg(unix)]
    #[test]
    fn command_candidate_parses_and_times_out() {
        let spec = |cmd: &str, parse| CommandSpec {
            id: "sh".into(),
            command: vec!["sh".into(), "-c".into(), cmd.into()],
            parse,
        };
        let echo = CommandCandidate::new(spec("echo 'result: {task}'", ParseRule::Regex { pattern: r"result: (\w+)".into() }))
            .unwrap();
        match echo.run(&Task::named("abc"), None).unwrap() {
            StageOutcome::Completed { output, .. } => assert_eq!(output, "abc"),
            other => panic!("unexpected {other:?}"),
        }
        let slow = CommandCandidate::new(spec("sleep 5", ParseRule::Trimmed)).unwrap();
        let out = slow.run(&Task::named("x"), Some(Duration::from_millis(50))).unwrap();
        assert!(matches!(out, StageOutcome::Abandoned { elapsed } if elapsed < Duration::from_millis(500)));
        let fail = CommandCandidate::new(spec("exit 3", ParseRule::Trimmed)).unwrap();
        assert!(matches!(fail.run(&Task::named("x"), None), Err(RunnerError::Crashed(_))));
    }

    #[test]
    fn manifest_json() {
        let m = Manifest::from_json(
            r#"{"candidates":[{"id":"a","command":["echo","{task}"]},{"id":"b","command":["cat","{task}"],"parse":{"rule":"last_line"}}]}"#,
        )
        .unwrap();
        assert_eq!(m.candidates[0].parse, ParseRule::Trimmed);
        assert_eq!(m.candidates[1].parse, ParseRule::LastLine);
        assert!(Manifest::from_json(r#"{"candidates":[]}"#).is_err());
        let bad = r#"{"candidates":[{"id":"a","command":["x"],"parse":{"rule":"regex","pattern":"("}}]}"#;
        assert!(Manifest::from_json(bad).unwrap().candidates().is_err());
    }
}
