//! Cooperative task machine: one task per control node, stepped by a
//! deterministic round-robin scheduler.

use super::runtime::Exec;
use super::FailureSignal;
use crate::contextualizer::{
    child_designator, ground_atomic, guard_holds, resolve_container, resolve_location_designator, GroundError, Guard, LocationStream,
};
use crate::failure::FailureKind;
use crate::motion_exec::MotionCommand;
use crate::neem::{Annotation, NodeStatus};
use crate::plan_lang::{
    print_designator, print_value, BufferMode, Condition, ControlNode, Designator, DesignatorKind, Handler, Literal,
    Value, WaitMode,
};
use crate::vocab::is_atomic;

pub(crate) enum Poll {
    Done(Result<(), FailureSignal>),
    /// Blocked; nothing happened.
    Pending,
    Progress,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Par,
    Pursue,
    TryAll,
}

enum Kind {
    Seq { nodes: Vec<ControlNode>, tasks: Vec<Task>, idx: usize, until_success: bool, failures: Vec<FailureSignal> },
    Conc { mode: Mode, nodes: Vec<ControlNode>, tasks: Vec<Task>, results: Vec<Option<Result<(), FailureSignal>>> },
    Wral { location: Value, body: Vec<ControlNode>, stream: Option<Box<LocationStream>>, cur: Option<Box<Task>>, repositions: u32 },
    Perform { value: Value, guards: Vec<Guard>, children: Vec<Task>, idx: usize },
    Handle { body: ControlNode, handlers: Vec<Handler>, max: u32, retries: u32, cur: Option<Box<Task>>, handling: bool },
    When { condition: Condition, body: Vec<ControlNode>, cur: Option<Box<Task>> },
    WaitFor { fluent: String, mode: WaitMode, base: u64 },
    Pulse { fluent: String, value: Literal },
    Sleep { remaining: u32 },
    Fail(FailureKind),
    Noop,
}

pub(crate) struct Task {
    id: Option<usize>,
    done: bool,
    label: (String, Option<String>, Option<String>),
    kind: Kind,
}

fn designator_label(v: &Value) -> (Option<String>, Option<String>) {
    match v {
        Value::Desig(d) => (d.type_name().map(str::to_string), Some(print_designator(d))),
        other => (None, Some(print_value(other))),
    }
}

impl Task {
    pub fn new(node: &ControlNode) -> Task {
        let seq = |nodes: &Vec<ControlNode>, until_success| Kind::Seq {
            nodes: nodes.clone(),
            tasks: Vec::new(),
            idx: 0,
            until_success,
            failures: Vec::new(),
        };
        let conc = |mode, nodes: &Vec<ControlNode>| Kind::Conc { mode, nodes: nodes.clone(), tasks: Vec::new(), results: Vec::new() };
        let kind = match node {
            ControlNode::Seq(cs) => seq(cs, false),
            ControlNode::TryInOrder(cs) => seq(cs, true),
            ControlNode::Par(cs) => conc(Mode::Par, cs),
            ControlNode::Pursue(cs) => conc(Mode::Pursue, cs),
            ControlNode::TryAll(cs) => conc(Mode::TryAll, cs),
            ControlNode::WithRobotAtLocation { location, body } => {
                Kind::Wral { location: location.clone(), body: body.clone(), stream: None, cur: None, repositions: 0 }
            }
            ControlNode::Perform(v) => return Task::perform(v.clone(), Vec::new()),
            ControlNode::HandleFailure { body, handlers, max_retries } => Kind::Handle {
                body: (**body).clone(),
                handlers: handlers.clone(),
                max: *max_retries,
                retries: 0,
                cur: None,
                handling: false,
            },
            ControlNode::When { condition, body } => Kind::When { condition: condition.clone(), body: body.clone(), cur: None },
            ControlNode::WaitFor { fluent, mode } => Kind::WaitFor { fluent: fluent.clone(), mode: *mode, base: 0 },
            ControlNode::Pulse { fluent, value } => Kind::Pulse { fluent: fluent.clone(), value: value.clone() },
            ControlNode::Sleep(n) => Kind::Sleep { remaining: *n },
            ControlNode::Fail(k) => Kind::Fail(*k),
            ControlNode::Atom(_) => Kind::Noop,
        };
        let designator = match node {
            ControlNode::WithRobotAtLocation { location, .. } => Some(print_value(location)),
            _ => None,
        };
        Task { id: None, done: false, label: (node.keyword().to_string(), None, designator), kind }
    }

    fn perform(value: Value, guards: Vec<Guard>) -> Task {
        let (t, d) = designator_label(&value);
        Task {
            id: None,
            done: false,
            label: ("perform".into(), t, d),
            kind: Kind::Perform { value, guards, children: Vec::new(), idx: 0 },
        }
    }

    fn seq(nodes: &[ControlNode]) -> Task {
        Task::new(&ControlNode::Seq(nodes.to_vec()))
    }

    pub fn step(&mut self, ex: &mut Exec, parent: Option<usize>) -> Poll {
        let first = self.id.is_none();
        if first {
            let (k, t, d) = &self.label;
            self.id = Some(ex.open(parent, k, t.as_deref(), d.clone()));
        }
        let id = self.id.unwrap();
        let poll = self.advance(ex, id, first);
        if let Poll::Done(r) = &poll {
            ex.close(id, r);
            self.done = true;
        }
        poll
    }

    /// Cancels a started, unfinished task and everything below it.
    pub fn cancel(&mut self, ex: &mut Exec) {
        let Some(id) = self.id else { return };
        if self.done {
            return;
        }
        match &mut self.kind {
            Kind::Seq { tasks, .. } | Kind::Conc { tasks, .. } | Kind::Perform { children: tasks, .. } => {
                tasks.iter_mut().for_each(|t| t.cancel(ex))
            }
            Kind::Wral { cur, .. } | Kind::Handle { cur, .. } | Kind::When { cur, .. } => {
                if let Some(t) = cur {
                    t.cancel(ex)
                }
            }
            _ => {}
        }
        ex.set_status(id, NodeStatus::Cancelled);
        self.done = true;
    }

    fn advance(&mut self, ex: &mut Exec, id: usize, first: bool) -> Poll {
        let fail = |k: FailureKind| Poll::Done(Err(FailureSignal::new(k, id)));
        match &mut self.kind {
            Kind::Seq { nodes, tasks, idx, until_success, failures } => {
                if first {
                    *tasks = nodes.iter().map(Task::new).collect();
                }
                if *idx == tasks.len() {
                    return match failures.last() {
                        Some(last) if *until_success => {
                            Poll::Done(Err(FailureSignal { causes: failures.clone(), ..last.clone() }))
                        }
                        _ => Poll::Done(Ok(())),
                    };
                }
                match tasks[*idx].step(ex, Some(id)) {
                    Poll::Done(Ok(())) if *until_success => Poll::Done(Ok(())),
                    Poll::Done(Ok(())) => {
                        *idx += 1;
                        Poll::Progress
                    }
                    Poll::Done(Err(f)) if *until_success => {
                        failures.push(f);
                        *idx += 1;
                        Poll::Progress
                    }
                    other => other,
                }
            }
            Kind::Conc { mode, nodes, tasks, results } => {
                if first {
                    *tasks = nodes.iter().map(Task::new).collect();
                    *results = vec![None; tasks.len()];
                }
                let mode = *mode;
                let mut progressed = false;
                for i in 0..tasks.len() {
                    if results[i].is_some() {
                        continue;
                    }
                    match tasks[i].step(ex, Some(id)) {
                        Poll::Pending => {}
                        Poll::Progress => progressed = true,
                        Poll::Done(r) => {
                            progressed = true;
                            let decisive =
                                matches!((&r, mode), (_, Mode::Pursue) | (Err(_), Mode::Par) | (Ok(()), Mode::TryAll));
                            results[i] = Some(r.clone());
                            if decisive {
                                tasks.iter_mut().for_each(|t| t.cancel(ex));
                                return Poll::Done(r);
                            }
                        }
                    }
                }
                if results.iter().all(Option::is_some) {
                    return match mode {
                        Mode::TryAll => {
                            let failures: Vec<FailureSignal> =
                                results.iter().filter_map(|r| r.as_ref().and_then(|r| r.as_ref().err()).cloned()).collect();
                            match failures.last() {
                                Some(last) => Poll::Done(Err(FailureSignal { causes: failures.clone(), ..last.clone() })),
                                None => fail(FailureKind::NoSolution),
                            }
                        }
                        _ => Poll::Done(Ok(())),
                    };
                }
                if progressed {
                    Poll::Progress
                } else {
                    Poll::Pending
                }
            }
            Kind::Wral { location, body, stream, cur, repositions } => {
                if first {
                    let seed = ex.next_seed();
                    let s = match resolve_location_designator(location, &ex.belief, seed) {
                        Ok(s) => s,
                        Err(k) => return fail(k),
                    };
                    let satisfied = s.satisfied_by(&ex.belief.robot.base);
                    *stream = Some(Box::new(s));
                    if !satisfied {
                        if let Err(f) = relocate(ex, id, stream.as_mut().unwrap()) {
                            return Poll::Done(Err(f));
                        }
                    }
                    *cur = Some(Box::new(Task::seq(body)));
                }
                let task = cur.as_mut().unwrap();
                match task.step(ex, Some(id)) {
                    Poll::Done(Err(f))
                        if f.kind == FailureKind::Unreachable
                            && !ex.projection
                            && *repositions < ex.interp.config.max_repositions =>
                    {
                        let from = ex.belief.robot.base;
                        if let Err(e) = relocate(ex, id, stream.as_mut().unwrap()) {
                            return Poll::Done(Err(e));
                        }
                        *repositions += 1;
                        ex.repositions += 1;
                        let to = ex.belief.robot.base;
                        ex.annotate(id, Annotation::Reposition { from, to });
                        *cur = Some(Box::new(Task::seq(body)));
                        Poll::Progress
                    }
                    other => other,
                }
            }
            Kind::Perform { value, guards, children, idx } => {
                if first {
                    match start_perform(ex, id, value, guards) {
                        Ok(Some(c)) => *children = c,
                        Ok(None) => return Poll::Done(Ok(())),
                        Err(f) => return Poll::Done(Err(f)),
                    }
                }
                if *idx == children.len() {
                    return Poll::Done(Ok(()));
                }
                match children[*idx].step(ex, Some(id)) {
                    Poll::Done(Ok(())) => {
                        *idx += 1;
                        if *idx == children.len() {
                            Poll::Done(Ok(()))
                        } else {
                            Poll::Progress
                        }
                    }
                    other => other,
                }
            }
            Kind::Handle { body, handlers, max, retries, cur, handling } => {
                if first {
                    *cur = Some(Box::new(Task::new(body)));
                }
                match cur.as_mut().unwrap().step(ex, Some(id)) {
                    Poll::Done(Ok(())) if *handling => {
                        *handling = false;
                        *cur = Some(Box::new(Task::new(body)));
                        Poll::Progress
                    }
                    Poll::Done(Err(f)) if !*handling => {
                        let handler = handlers.iter().find(|h| h.kinds.is_empty() || h.kinds.contains(&f.kind));
                        match handler {
                            Some(h) if *retries < *max => {
                                *retries += 1;
                                ex.handled_retries += 1;
                                ex.set_retries(id, *retries);
                                ex.annotate(id, Annotation::Retry { attempt: *retries, failure: f.kind });
                                if h.body.is_empty() {
                                    *cur = Some(Box::new(Task::new(body)));
                                } else {
                                    *handling = true;
                                    *cur = Some(Box::new(Task::seq(&h.body)));
                                }
                                Poll::Progress
                            }
                            _ => Poll::Done(Err(f)),
                        }
                    }
                    other => other,
                }
            }
            Kind::When { condition, body, cur } => {
                if first {
                    if !ex.holds(condition) {
                        ex.annotate(id, Annotation::Skipped { guard: "condition".into() });
                        return Poll::Done(Ok(()));
                    }
                    *cur = Some(Box::new(Task::seq(body)));
                }
                cur.as_mut().unwrap().step(ex, Some(id))
            }
            Kind::WaitFor { fluent, mode, base } => {
                let f = ex.fluent(fluent);
                if first {
                    *base = f.pulses;
                }
                match mode {
                    WaitMode::ValueAvailable if f.holds() => Poll::Done(Ok(())),
                    WaitMode::ValueAvailable => Poll::Pending,
                    WaitMode::Pulsed => {
                        let ready = match f.buffer {
                            BufferMode::Latest | BufferMode::All => f.pulses > f.consumed,
                            BufferMode::None => f.pulses > *base,
                        };
                        if !ready {
                            return Poll::Pending;
                        }
                        f.consumed = match f.buffer {
                            BufferMode::All => f.consumed + 1,
                            _ => f.pulses,
                        };
                        Poll::Done(Ok(()))
                    }
                }
            }
            Kind::Pulse { fluent, value } => {
                let f = ex.fluent(fluent);
                f.value = Some(value.clone());
                f.pulses += 1;
                Poll::Done(Ok(()))
            }
            Kind::Sleep { remaining } => {
                if *remaining == 0 {
                    return Poll::Done(Ok(()));
                }
                *remaining -= 1;
                Poll::Progress
            }
            Kind::Fail(k) => fail(*k),
            Kind::Noop => Poll::Done(Ok(())),
        }
    }
}

/// Drives to the next candidate of the stream that can be reached.
fn relocate(ex: &mut Exec, wral: usize, stream: &mut LocationStream) -> Result<(), FailureSignal> {
    ex.set_status(wral, NodeStatus::Suspended);
    let result = loop {
        let Some(pose) = stream.next() else { break Err(FailureSignal::new(FailureKind::NoSolution, wral)) };
        let d = Designator::motion("going").with("target", Value::pose(pose));
        let node = ex.open(Some(wral), "motion", Some("going"), Some(print_designator(&d)));
        let cmd = MotionCommand::from_designator(&d).expect("going designator");
        let r = ex.run_motion(node, &cmd);
        ex.close(node, &r);
        if r.is_ok() {
            break Ok(());
        }
    };
    ex.set_status(wral, NodeStatus::Running);
    result
}

/// Starts a perform: returns the child tasks to run in order, or `None` when
/// the action is complete already (skipped or a single motion).
fn start_perform(ex: &mut Exec, id: usize, value: &Value, guards: &[Guard]) -> Result<Option<Vec<Task>>, FailureSignal> {
    let fail = |k| FailureSignal::new(k, id);
    let Value::Desig(d) = value else { return Err(fail(FailureKind::NoSolution)) };
    match d.kind {
        DesignatorKind::Motion => {
            let cmd = MotionCommand::from_designator(d).map_err(|_| fail(FailureKind::NoSolution))?;
            return ex.run_motion(id, &cmd).map(|_| None);
        }
        DesignatorKind::Action => {}
        _ => return Err(fail(FailureKind::NoSolution)),
    }
    let t = d.type_name().unwrap_or_default();
    let h = &ex.interp.hierarchy;
    let all_guards: Vec<Guard> = guards.iter().chain(h.guards(t)).copied().collect();
    if let Some(g) = all_guards.into_iter().find(|g| !guard_holds(*g, d, &ex.belief)) {
        ex.annotate(id, Annotation::Skipped { guard: g.as_str().to_string() });
        return Ok(None);
    }
    if let Some(def) = ex.definition(t) {
        let body = ex.contextualize(id, def, d)?;
        return Ok(Some(body.iter().map(Task::new).collect()));
    }
    if let Some(steps) = h.steps(t) {
        if matches!(t, "picking-up" | "placing") {
            ex.record_trial(id, d);
        }
        let children = steps
            .iter()
            .map(|s| {
                let mut c = child_designator(h, d, s);
                // Pin container references while the object still rests in its source.
                if c.symbol("container").is_some_and(|x| x.starts_with('$')) {
                    if let Some(id) = resolve_container(&c, &ex.belief) {
                        c.set("container", Value::symbol(id));
                    }
                }
                Task::perform(Value::Desig(c), s.when.clone())
            })
            .collect();
        return Ok(Some(children));
    }
    if is_atomic(t) {
        let cmd = ground_atomic(d, &ex.belief).map_err(|e| match e {
            GroundError::Failure(k) => fail(k),
            GroundError::UnknownAtomicAction(_) => fail(FailureKind::NoSolution),
        })?;
        return ex.run_motion(id, &cmd).map(|_| None);
    }
    Err(fail(FailureKind::NoSolution))
}

impl Exec<'_> {
    /// Runs a node to completion under the step budget.
    pub fn run(&mut self, node: &ControlNode) -> Result<(), FailureSignal> {
        let mut root = Task::new(node);
        loop {
            self.step += 1;
            if self.step > self.interp.config.step_budget {
                root.cancel(self);
                let id = root.id.unwrap_or(0);
                self.set_status(id, NodeStatus::Failed(FailureKind::Timeout));
                return Err(FailureSignal::new(FailureKind::Timeout, id));
            }
            if let Poll::Done(r) = root.step(self, None) {
                return r;
            }
        }
    }
}
