//! Per-episode interpreter state shared by all tasks.

use std::collections::BTreeMap;

use super::{FailureSignal, Interpreter};
use crate::contextualizer::{
    formulate_parameter_query, instantiate_plan, location_pose, schema_arguments, stance_combo, ParamQuery,
};
use crate::failure::FailureKind;
use crate::knowledge::{
    context_key, resolve_designator_parameters, GenerativeModel, Projector, QueryContext, Resolution, Term,
};
use crate::motion_exec::{execute_motion, MotionCommand};
use crate::neem::{Annotation, Combo, ContextKey, NodeStatus, Recorder, TrialRecord};
use crate::plan_lang::{
    print_value, BufferMode, Condition, ControlNode, Designator, DesignatorKind, Literal, PlanDef, Value,
};
use crate::world::{resolve_object, update_belief_from_event, ArmSel, WorldState};

#[derive(Debug, Clone)]
pub(crate) struct Fluent {
    pub value: Option<Literal>,
    pub pulses: u64,
    /// Pulses already handed to waiters.
    pub consumed: u64,
    pub buffer: BufferMode,
}

impl Fluent {
    fn new(buffer: BufferMode) -> Self {
        Fluent { value: None, pulses: 0, consumed: 0, buffer }
    }

    pub fn holds(&self) -> bool {
        match &self.value {
            None => false,
            Some(l) => !matches!(l.as_symbol(), Some("nil") | Some("false")),
        }
    }
}

/// Mixes the episode seed with a counter.
pub(crate) fn derive_seed(seed: u64, n: u64) -> u64 {
    let mut z = seed ^ n.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) struct Exec<'a> {
    pub interp: &'a Interpreter,
    pub defs: &'a [PlanDef],
    pub gm: GenerativeModel,
    pub seed: u64,
    pub truth: WorldState,
    pub belief: WorldState,
    pub recorder: Option<Recorder>,
    pub projection: bool,
    pub fluents: BTreeMap<String, Fluent>,
    pub step: u64,
    pub draws: u64,
    pub next_id: usize,
    pub repositions: u32,
    pub handled_retries: u32,
    pub projections: u32,
    pub contexts: BTreeMap<String, ContextKey>,
}

/// Projection: the body runs with the same machinery on copies of the belief.
struct Prospector<'a> {
    interp: &'a Interpreter,
    defs: &'a [PlanDef],
    seed: u64,
}

impl Projector for Prospector<'_> {
    fn project(&mut self, body: &[ControlNode], belief: &WorldState) -> Result<(), FailureKind> {
        let mut ex = Exec::new(self.interp, self.defs, GenerativeModel::Epl, self.seed, belief.clone(), None, true);
        ex.belief = belief.clone();
        ex.run(&ControlNode::Seq(body.to_vec())).map_err(|f| f.kind)
    }
}

impl<'a> Exec<'a> {
    pub fn new(
        interp: &'a Interpreter,
        defs: &'a [PlanDef],
        gm: GenerativeModel,
        seed: u64,
        world: WorldState,
        recorder: Option<Recorder>,
        projection: bool,
    ) -> Self {
        Exec {
            interp,
            defs,
            gm,
            seed,
            belief: world.clone(),
            truth: world,
            recorder,
            projection,
            fluents: BTreeMap::new(),
            step: 0,
            draws: 0,
            next_id: 0,
            repositions: 0,
            handled_retries: 0,
            projections: 0,
            contexts: BTreeMap::new(),
        }
    }

    pub fn declare_fluent(&mut self, name: &str, buffer: BufferMode) {
        self.fluents.entry(name.to_string()).or_insert_with(|| Fluent::new(buffer));
    }

    pub fn fluent(&mut self, name: &str) -> &mut Fluent {
        self.fluents.entry(name.to_string()).or_insert_with(|| Fluent::new(BufferMode::Latest))
    }

    pub fn next_seed(&mut self) -> u64 {
        self.draws += 1;
        derive_seed(self.seed, self.draws)
    }

    pub fn open(&mut self, parent: Option<usize>, kind: &str, action_type: Option<&str>, designator: Option<String>) -> usize {
        let step = self.step;
        match self.recorder.as_mut() {
            Some(r) => r.open_node(parent, kind, action_type, designator, step).expect("recorder live"),
            None => {
                self.next_id += 1;
                self.next_id - 1
            }
        }
    }

    pub fn set_status(&mut self, id: usize, status: NodeStatus) {
        let step = self.step;
        if let Some(r) = self.recorder.as_mut() {
            r.set_status(id, status, step).expect("recorder live");
        }
    }

    pub fn close(&mut self, id: usize, result: &Result<(), FailureSignal>) {
        let status = match result {
            Ok(()) => NodeStatus::Succeeded,
            Err(f) => NodeStatus::Failed(f.kind),
        };
        self.set_status(id, status);
    }

    pub fn annotate(&mut self, id: usize, a: Annotation) {
        if let Some(r) = self.recorder.as_mut() {
            r.annotate(id, a).expect("recorder live");
        }
    }

    pub fn set_retries(&mut self, id: usize, n: u32) {
        if let Some(r) = self.recorder.as_mut() {
            r.set_retries(id, n).expect("recorder live");
        }
    }

    /// Executes one motion on the true world; the belief mirrors the robot's
    /// own successful events.
    pub fn run_motion(&mut self, node: usize, cmd: &MotionCommand) -> Result<(), FailureSignal> {
        let out = execute_motion(&mut self.truth, Some(&mut self.belief), cmd, &self.interp.config.motion);
        if out.result.is_ok() {
            for e in &out.events {
                update_belief_from_event(&mut self.belief, &e.kind);
            }
        }
        let failure = out.result.err();
        let step = self.step;
        let sample = failure.is_none().then(|| (step, self.truth.robot.base, self.truth.fingerprint()));
        if let Some(r) = self.recorder.as_mut() {
            r.record_motion(node, step, cmd, &out.events, failure, sample).expect("recorder live");
        }
        out.result.map_err(|k| FailureSignal::new(k, node))
    }

    pub fn definition(&self, name: &str) -> Option<&'a PlanDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Instantiates a schema call, answers its parameter query and returns
    /// the grounded body.
    pub fn contextualize(&mut self, node: usize, def: &PlanDef, action: &Designator) -> Result<Vec<ControlNode>, FailureSignal> {
        let fail = |k| FailureSignal::new(k, node);
        let inst = instantiate_plan(self.defs, &def.name, &schema_arguments(def, action))
            .map_err(|_| fail(FailureKind::NoSolution))?;
        let q: ParamQuery = formulate_parameter_query(&inst);
        if q.variables.is_empty() {
            return Ok(inst.body);
        }
        let seed = self.next_seed();
        let gm = self.gm.clone();
        let mut prospector = Prospector { interp: self.interp, defs: self.defs, seed };
        let projector: Option<&mut dyn Projector> = match gm {
            GenerativeModel::Prospective { .. } if !self.projection => Some(&mut prospector),
            _ => None,
        };
        let ctx = QueryContext { belief: &self.belief, kb: &self.interp.kb, seed, projector };
        let res: Resolution = resolve_designator_parameters(&q, &gm, ctx).map_err(fail)?;
        self.projections += res.projections;
        for (o, c) in &res.contexts {
            self.contexts.insert(o.clone(), c.clone());
        }
        let answer = res.bindings.iter().map(|(k, v)| (k.clone(), print_value(v))).collect();
        self.annotate(
            node,
            Annotation::Query {
                schema: def.name.clone(),
                gm: gm.name().to_string(),
                variables: q.variables.iter().map(|v| v.name().to_string()).collect(),
                answer,
                samples: res.samples,
                projections: res.projections,
            },
        );
        q.ground(&res.bindings).map_err(|_| fail(FailureKind::NoSolution))
    }

    /// Notes the parameterization of a pick or place about to be attempted.
    pub fn record_trial(&mut self, node: usize, d: &Designator) {
        if self.recorder.is_none() {
            return;
        }
        let action = d.type_name().unwrap_or_default().to_string();
        let Some(object) = d.get("object").and_then(|v| resolve_object(&self.belief, v)) else { return };
        let destination = ["target", "destination"].iter().find_map(|k| d.get(k).and_then(location_pose));
        let point = match action.as_str() {
            "picking-up" => self.belief.object(&object).map(|o| o.pose),
            _ => destination,
        };
        let Some(point) = point else { return };
        let context = self
            .contexts
            .get(&object)
            .cloned()
            .unwrap_or_else(|| context_key(&self.belief, &object, destination.as_ref()));
        let (ring, heading) = stance_combo(point.xy(), &self.belief.robot.base);
        let combo = Combo {
            arm: d.symbol("arm").and_then(|a| a.parse().ok()).unwrap_or(ArmSel::Right),
            grasp: d.symbol("grasp").and_then(|g| g.parse().ok()),
            ring,
            heading,
        };
        self.annotate(node, Annotation::Trial(TrialRecord { action, object, context, combo }));
    }

    fn term(&self, v: &Value) -> Term {
        match v {
            Value::Var(x) => Term::var(x.name()),
            Value::Lit(Literal::Number(n)) => Term::Num(*n),
            Value::Lit(Literal::Pose(p)) => Term::Pose(*p),
            Value::Lit(Literal::Symbol(s)) | Value::Lit(Literal::Str(s)) => Term::sym(s),
            Value::Desig(d) if d.kind == DesignatorKind::Object => {
                resolve_object(&self.belief, v).map_or_else(|| Term::sym(print_value(v)), Term::Sym)
            }
            Value::Desig(_) => match location_pose(v) {
                Some(p) => Term::Pose(p),
                None => Term::sym(print_value(v)),
            },
        }
    }

    /// Evaluates a `when` condition against the belief and fluents.
    pub fn holds(&mut self, c: &Condition) -> bool {
        match c {
            Condition::Goal { predicate, args } => {
                let atom = crate::knowledge::Atom::new(predicate, args.iter().map(|a| self.term(a)).collect());
                self.interp.kb.query_first(&atom, &self.belief).is_some()
            }
            Condition::Fluent(name) => self.fluent(name).holds(),
            Condition::Not(inner) => !self.holds(inner),
            Condition::And(cs) => cs.iter().all(|c| self.holds(c)),
        }
    }
}
