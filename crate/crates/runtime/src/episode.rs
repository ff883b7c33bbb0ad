//! The per-episode simulation loop.
//!
//! Slow-loop requests go to the backend while the controllers keep acting. A reply
//! is applied at the tick boundary `issued + max(1, ceil(latency / period))`. Fast
//! mode computes replies synchronously and holds them until that boundary. Realtime
//! mode runs each call on its own thread. With a deterministic backend both modes
//! apply every reply at the same tick, so their traces are identical.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use dpt_core::agents::{Agent, AgentKind, Applied, ConfigError};
use dpt_core::log::{AppliedLog, CallLog, EpisodeHeader, EpisodeLog, Footer, LogRecord, MacroRecord, TickRecord};
use dpt_core::metrics::compute_report;
use dpt_core::system2::{CallOutcome, JobRequest, Reply, SlowConfig, TrajectoryEntry};
use dpt_core::{AtomicAction, EnvConfig, GameEvent, GameState, Layout};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, Completion};
use crate::logio::LogWriter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    #[default]
    Fast,
    Realtime,
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Agent(#[from] ConfigError),
    #[error("layout has {spawns} spawn points but {seats} seats were requested")]
    Seats { seats: usize, spawns: usize },
    #[error("seat {0} needs a completion backend")]
    NoBackend(usize),
    #[error("tick period must be positive")]
    Period,
    #[error("cannot write log: {0}")]
    Io(#[from] std::io::Error),
}

/// Flags shared with whoever supervises a running episode.
#[derive(Debug, Default)]
pub struct Controls {
    paused: AtomicBool,
    cancelled: AtomicBool,
}

impl Controls {
    pub fn paused() -> Controls {
        Controls { paused: AtomicBool::new(true), cancelled: AtomicBool::new(false) }
    }

    pub fn set_paused(&self, paused: bool) {
        self.paused.store(paused, Ordering::SeqCst);
    }

    pub fn is_paused(&self) -> bool {
        self.paused.load(Ordering::SeqCst)
    }

    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancelled.load(Ordering::SeqCst)
    }
}

/// Latest-wins input for a human seat. Each tick takes at most one action.
#[derive(Debug, Default)]
pub struct InputSlot(Mutex<Option<AtomicAction>>);

impl InputSlot {
    pub fn set(&self, action: AtomicAction) {
        *self.0.lock().expect("input lock") = Some(action);
    }

    pub fn take(&self) -> Option<AtomicAction> {
        self.0.lock().expect("input lock").take()
    }
}

/// Everything that fixes an episode's dynamics.
#[derive(Clone)]
pub struct EpisodeSetup {
    pub layout: Arc<Layout>,
    pub env: EnvConfig,
    pub seats: Vec<AgentKind>,
    pub slow: SlowConfig,
    pub mode: RunMode,
    pub tick_period: Duration,
    pub backend: Option<Arc<dyn Backend>>,
}

impl EpisodeSetup {
    pub fn header(&self) -> EpisodeHeader {
        EpisodeHeader::new(
            self.layout.name.clone(),
            self.layout.source.clone(),
            self.env.clone(),
            self.seats.iter().map(|k| k.as_str().to_string()).collect(),
        )
    }
}

/// What a finished (or cancelled) episode produced.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub log: EpisodeLog,
    /// A backend call timed out or failed.
    pub degraded: bool,
    pub cancelled: bool,
    /// Realtime only: lateness of each tick boundary, in milliseconds.
    pub jitter_ms: Vec<f64>,
    pub wall: Duration,
}

enum Seat {
    Agent(Box<Agent>),
    Human(Option<Arc<InputSlot>>),
}

struct Pending {
    seat: usize,
    id: u64,
    issued_at: u32,
    /// The reply and the moment it may be used.
    reply: Option<(Completion, Instant)>,
}

type Arrival = (usize, u64, Completion, Instant);

type TickObserver<'a> = Box<dyn FnMut(&GameState, &TickRecord) + Send + 'a>;

pub struct Episode<'a> {
    setup: EpisodeSetup,
    state: GameState,
    seats: Vec<Seat>,
    log: EpisodeLog,
    pending: Vec<Pending>,
    tx: mpsc::Sender<Arrival>,
    rx: mpsc::Receiver<Arrival>,
    controls: Arc<Controls>,
    writer: Option<LogWriter>,
    observer: Option<TickObserver<'a>>,
    degraded: bool,
}

/// Ticks between issuing a call and applying its reply.
pub fn latency_ticks(latency_s: f64, period: Duration) -> u32 {
    let ticks = (latency_s.max(0.0) / period.as_secs_f64()).ceil();
    (ticks as u32).max(1)
}

impl<'a> Episode<'a> {
    pub fn new(setup: EpisodeSetup) -> Result<Episode<'a>, EpisodeError> {
        if setup.tick_period.is_zero() {
            return Err(EpisodeError::Period);
        }
        let spawns = setup.layout.spawns.len();
        if setup.seats.is_empty() || setup.seats.len() > spawns {
            return Err(EpisodeError::Seats { seats: setup.seats.len(), spawns });
        }
        let mut seats = Vec::new();
        for (i, &kind) in setup.seats.iter().enumerate() {
            if kind == AgentKind::Human {
                seats.push(Seat::Human(None));
                continue;
            }
            let agent = Agent::build(kind, i, setup.slow)?;
            if agent.needs_backend() && setup.backend.is_none() {
                return Err(EpisodeError::NoBackend(i));
            }
            seats.push(Seat::Agent(Box::new(agent)));
        }
        let state = GameState::new(setup.layout.clone(), Arc::new(setup.env.clone()), setup.seats.len());
        let (tx, rx) = mpsc::channel();
        Ok(Episode {
            log: EpisodeLog::new(setup.header()),
            setup,
            state,
            seats,
            pending: Vec::new(),
            tx,
            rx,
            controls: Arc::new(Controls::default()),
            writer: None,
            observer: None,
            degraded: false,
        })
    }

    pub fn with_controls(mut self, controls: Arc<Controls>) -> Self {
        self.controls = controls;
        self
    }

    /// Feeds a human seat from `slot`.
    pub fn with_input(mut self, seat: usize, slot: Arc<InputSlot>) -> Self {
        if let Some(Seat::Human(s)) = self.seats.get_mut(seat) {
            *s = Some(slot);
        }
        self
    }

    /// Streams records to `writer` as they are produced.
    pub fn with_writer(mut self, writer: LogWriter) -> Self {
        self.writer = Some(writer);
        self
    }

    /// Called after every tick with the new state.
    pub fn on_tick(mut self, f: impl FnMut(&GameState, &TickRecord) + Send + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    fn emit(&mut self, record: &LogRecord) -> Result<(), EpisodeError> {
        if let Some(w) = &mut self.writer {
            w.write(record)?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<EpisodeResult, EpisodeError> {
        let start = Instant::now();
        self.emit(&LogRecord::Header(self.log.header.clone()))?;
        let period = self.setup.tick_period;
        let realtime = self.setup.mode == RunMode::Realtime;
        let mut jitter_ms = Vec::new();
        let mut next = Instant::now();
        let mut cancelled = false;
        while !self.state.is_over() {
            if self.controls.is_cancelled() {
                cancelled = true;
                break;
            }
            if self.controls.is_paused() {
                std::thread::sleep(Duration::from_millis(5));
                next = Instant::now();
                continue;
            }
            if realtime {
                sleep_until(next);
                jitter_ms.push(Instant::now().saturating_duration_since(next).as_secs_f64() * 1e3);
                next += period;
            }
            self.step_once()?;
        }
        if realtime && !cancelled {
            // The last tick lasts a full period too.
            sleep_until(next);
        }
        let footer = self.footer();
        self.emit(&LogRecord::Footer(footer.clone()))?;
        if let Some(w) = &mut self.writer {
            w.flush()?;
        }
        self.log.footer = Some(footer);
        Ok(EpisodeResult { log: self.log, degraded: self.degraded, cancelled, jitter_ms, wall: start.elapsed() })
    }

    fn footer(&self) -> Footer {
        let reports = (0..self.seats.len()).map(|p| compute_report(&self.log, p)).collect();
        Footer { final_score: self.state.score, ticks: self.log.ticks.len() as u32, degraded: self.degraded, reports }
    }

    fn step_once(&mut self) -> Result<(), EpisodeError> {
        let tick = self.state.tick;
        let calls = self.apply_due(tick)?;
        self.dispatch(tick);

        let mut actions = Vec::with_capacity(self.seats.len());
        let mut finished = Vec::new();
        for seat in &mut self.seats {
            let a = match seat {
                Seat::Agent(agent) => {
                    let (a, rec) = agent.tick(&self.state);
                    finished.extend(rec.finished.into_iter().map(|f| MacroRecord {
                        player: agent.me,
                        action: f.action,
                        source: f.source,
                        issued_at: f.issued_at,
                        finished_at: tick,
                        outcome: f.outcome,
                        atomics: f.atomics,
                    }));
                    a
                }
                Seat::Human(slot) => slot.as_ref().and_then(|s| s.take()).unwrap_or(AtomicAction::Noop),
            };
            actions.push(a);
        }
        let labels: Vec<String> = self
            .seats
            .iter()
            .zip(&actions)
            .map(|(s, &a)| match s {
                Seat::Agent(agent) => agent.action_label(a),
                Seat::Human(_) => a.as_str().to_string(),
            })
            .collect();

        let events = self.state.step(&actions);
        self.observe(tick, &labels, &events);

        let record = TickRecord { tick, actions, events, score: self.state.score, hash: self.state.state_hash() };
        self.emit(&LogRecord::Tick(record.clone()))?;
        for m in finished {
            self.emit(&LogRecord::Macro(m.clone()))?;
            self.log.macros.push(m);
        }
        for c in calls {
            self.emit(&LogRecord::Call(c.clone()))?;
            self.log.calls.push(c);
        }
        if let Some(w) = &mut self.writer {
            w.flush()?;
        }
        if let Some(f) = &mut self.observer {
            f(&self.state, &record);
        }
        self.log.ticks.push(record);
        Ok(())
    }

    fn observe(&mut self, tick: u32, labels: &[String], events: &[GameEvent]) {
        for (i, seat) in self.seats.iter_mut().enumerate() {
            let Seat::Agent(agent) = seat else { continue };
            let partner = labels.iter().enumerate().find(|(j, _)| *j != i).map_or("none", |(_, l)| l.as_str());
            let entry = TrajectoryEntry::from_step(&self.state, i, tick, labels[i].clone(), partner.to_string(), events);
            agent.observe(entry);
        }
    }

    /// Applies every reply due at `tick`, in due order. Returns the call records,
    /// written after the tick record.
    fn apply_due(&mut self, tick: u32) -> Result<Vec<CallLog>, EpisodeError> {
        let period = self.setup.tick_period;
        let deterministic = self.setup.backend.as_ref().is_some_and(|b| b.deterministic());
        // Deterministic backends answer at once, so their latency and due tick are
        // known right away. Waiting for them keeps the trace independent of thread
        // scheduling.
        while deterministic && self.pending.iter().any(|p| p.reply.is_none()) {
            self.collect(Some(Duration::from_millis(1)));
        }
        self.collect(None);
        let mut ready = Vec::new();
        let mut rest = Vec::new();
        for p in self.pending.drain(..) {
            match &p.reply {
                Some((c, visible)) if tick >= p.issued_at + latency_ticks(c.latency_s, period) => {
                    if deterministic {
                        sleep_until(*visible);
                        ready.push(p);
                    } else if Instant::now() >= *visible {
                        ready.push(p);
                    } else {
                        rest.push(p);
                    }
                }
                _ => rest.push(p),
            }
        }
        self.pending = rest;
        ready.sort_by_key(|p| (p.issued_at, p.seat, p.id));
        let mut calls = Vec::new();
        for p in ready {
            let Some(Seat::Agent(agent)) = self.seats.get_mut(p.seat) else { continue };
            let Some(slow) = agent.slow.as_mut() else { continue };
            let (c, _) = p.reply.expect("ready replies are complete");
            let Some((record, update)) = slow.complete(p.id, c.reply, c.latency_s, tick) else { continue };
            if matches!(record.outcome, CallOutcome::Timeout | CallOutcome::Error) {
                self.degraded = true;
            }
            if let Some(update) = update {
                let applied = AppliedLog { player: p.seat, tick, applied: agent.apply(&self.state, update) };
                if let Applied::Swap { tasks, .. } = &applied.applied {
                    let repeat = self.log.applied.iter().rev().find_map(|a| match &a.applied {
                        Applied::Swap { tasks: prev, .. } if a.player == p.seat => Some(prev == tasks),
                        _ => None,
                    });
                    if repeat == Some(true) {
                        tracing::warn!(seat = p.seat, tick, "task list repeats the previous one");
                    }
                }
                self.emit(&LogRecord::Applied(applied.clone()))?;
                self.log.applied.push(applied);
            }
            calls.push(CallLog { player: p.seat, call: record });
        }
        Ok(calls)
    }

    /// Moves replies from worker threads into the pending list.
    fn collect(&mut self, wait: Option<Duration>) {
        let mut arrived = Vec::new();
        if let Some(w) = wait {
            if let Ok(m) = self.rx.recv_timeout(w) {
                arrived.push(m);
            }
        }
        arrived.extend(self.rx.try_iter());
        for (seat, id, c, visible) in arrived {
            if let Some(p) = self.pending.iter_mut().find(|p| p.seat == seat && p.id == id) {
                p.reply = Some((c, visible));
            }
        }
    }

    fn dispatch(&mut self, tick: u32) {
        let Some(backend) = self.setup.backend.clone() else { return };
        for (seat, s) in self.seats.iter_mut().enumerate() {
            let Seat::Agent(agent) = s else { continue };
            for req in agent.poll(tick) {
                self.pending.push(issue(&backend, seat, req, self.setup.mode, &self.tx));
            }
        }
    }
}

fn call_backend(backend: &dyn Backend, req: &JobRequest) -> Completion {
    match catch_unwind(AssertUnwindSafe(|| backend.complete(&req.prompt))) {
        Ok(c) => c,
        Err(_) => Completion { reply: Reply::Failed("backend panicked".into()), latency_s: 0.0 },
    }
}

fn issue(backend: &Arc<dyn Backend>, seat: usize, req: JobRequest, mode: RunMode, tx: &mpsc::Sender<Arrival>) -> Pending {
    tracing::debug!(seat, id = req.id, kind = ?req.kind, tick = req.issued_at, "backend call issued");
    let (id, issued_at) = (req.id, req.issued_at);
    match mode {
        RunMode::Fast => {
            let c = call_backend(backend.as_ref(), &req);
            Pending { seat, id, issued_at, reply: Some((c, Instant::now())) }
        }
        RunMode::Realtime => {
            let (backend, tx) = (backend.clone(), tx.clone());
            std::thread::spawn(move || {
                let c = call_backend(backend.as_ref(), &req);
                let visible = Instant::now() + backend.wall_delay(c.latency_s);
                let _ = tx.send((seat, req.id, c, visible));
            });
            Pending { seat, id, issued_at, reply: None }
        }
    }
}

/// Sleeps most of the way, then spins for the last stretch to hit the boundary
/// within a fraction of a millisecond.
fn sleep_until(deadline: Instant) {
    const SPIN: Duration = Duration::from_millis(2);
    let now = Instant::now();
    if deadline > now + SPIN {
        std::thread::sleep(deadline - now - SPIN);
    }
    while Instant::now() < deadline {
        std::hint::spin_loop();
    }
}
