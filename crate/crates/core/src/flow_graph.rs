//! Information flow graphs for repair histories.
//!
//! Every device is three nodes (input, coordination, output). A repair of
//! `t` devices adds, for each new device, `d` collect edges of capacity
//! `beta` from the donors' outputs, `t - 1` coordination edges of capacity
//! `beta'` from the other new devices' inputs, an infinite edge from its own
//! input and a storage edge of capacity `alpha`. Min-cuts are computed by an
//! exact max-flow over integers obtained by scaling every capacity to a
//! common denominator.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost_model::{scenario_flow, CodeParams, CostError, CostPoint, RecoveryScenario};
use crate::ratio::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("invalid repair history: {0}")]
    InvalidHistory(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("collector is reachable from the source through infinite edges only")]
    Unbounded,
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Source,
    Input,
    Coordination,
    Output,
    Collector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowNode {
    pub kind: NodeKind,
    /// 0 for initial devices, `i` for devices added by the `i`-th repair.
    pub repair_step: usize,
    /// Device slot the node belongs to.
    pub device_index: usize,
}

impl fmt::Display for FlowNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Source => write!(f, "S"),
            NodeKind::Collector => write!(f, "DC{}", self.device_index),
            NodeKind::Input => write!(f, "in/{}/{}", self.repair_step, self.device_index),
            NodeKind::Coordination => write!(f, "coor/{}/{}", self.repair_step, self.device_index),
            NodeKind::Output => write!(f, "out/{}/{}", self.repair_step, self.device_index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Finite(Rational),
    Infinite,
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(r) => write!(f, "{r}"),
            Capacity::Infinite => write!(f, "inf"),
        }
    }
}

/// What an edge stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Source to an initial device.
    Source,
    /// Input to own coordination node (everything collected is kept).
    Keep,
    Collect,
    Coordinate,
    Store,
    /// Output to a data collector.
    Read,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub capacity: Capacity,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DeviceNodes {
    input: usize,
    coordination: usize,
    output: usize,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    nodes: Vec<FlowNode>,
    edges: Vec<Edge>,
    /// Current device per slot.
    active: Vec<DeviceNodes>,
    collectors: usize,
}

impl FlowGraph {
    pub const SOURCE: usize = 0;

    /// Source plus `n` initial devices each storing `alpha`.
    pub fn with_initial_devices(n: usize, alpha: &Rational) -> Self {
        let mut g = FlowGraph {
            nodes: vec![FlowNode { kind: NodeKind::Source, repair_step: 0, device_index: 0 }],
            edges: Vec::new(),
            active: Vec::with_capacity(n),
            collectors: 0,
        };
        for j in 0..n {
            let dev = g.add_device(0, j, alpha);
            g.add_edge(Self::SOURCE, dev.input, Capacity::Infinite, EdgeKind::Source);
            g.active.push(dev);
        }
        g
    }

    fn add_node(&mut self, kind: NodeKind, repair_step: usize, device_index: usize) -> usize {
        self.nodes.push(FlowNode { kind, repair_step, device_index });
        self.nodes.len() - 1
    }

    fn add_edge(&mut self, from: usize, to: usize, capacity: Capacity, kind: EdgeKind) {
        self.edges.push(Edge { from, to, capacity, kind });
    }

    fn add_device(&mut self, step: usize, slot: usize, alpha: &Rational) -> DeviceNodes {
        let input = self.add_node(NodeKind::Input, step, slot);
        let coordination = self.add_node(NodeKind::Coordination, step, slot);
        let output = self.add_node(NodeKind::Output, step, slot);
        self.add_edge(input, coordination, Capacity::Infinite, EdgeKind::Keep);
        self.add_edge(coordination, output, Capacity::Finite(alpha.clone()), EdgeKind::Store);
        DeviceNodes { input, coordination, output }
    }

    /// Replaces the devices in `repaired` with new ones that collect `beta`
    /// from each donor and exchange `beta'` among themselves. The old
    /// devices become inactive.
    pub fn apply_repair(&mut self, step: usize, repaired: &[usize], donors: &[usize], c: &CostPoint) {
        let donor_outputs: Vec<usize> = donors.iter().map(|&j| self.active[j].output).collect();
        let fresh: Vec<DeviceNodes> = repaired.iter().map(|&j| self.add_device(step, j, &c.alpha)).collect();
        for dev in &fresh {
            for &out in &donor_outputs {
                self.add_edge(out, dev.input, Capacity::Finite(c.beta.clone()), EdgeKind::Collect);
            }
        }
        for (a, from) in fresh.iter().enumerate() {
            for (b, to) in fresh.iter().enumerate() {
                if a != b {
                    self.add_edge(from.input, to.coordination, Capacity::Finite(c.beta_prime.clone()), EdgeKind::Coordinate);
                }
            }
        }
        for (&j, dev) in repaired.iter().zip(fresh) {
            self.active[j] = dev;
        }
    }

    /// Adds a data collector reading every active device in `slots`.
    pub fn attach_collector(&mut self, slots: &[usize]) -> Result<usize, FlowError> {
        let outs = slots
            .iter()
            .map(|&j| self.active.get(j).map(|d| d.output).ok_or(FlowError::NoSuchNode(j)))
            .collect::<Result<Vec<_>, _>>()?;
        self.attach_collector_to_outputs(&outs)
    }

    /// Adds a data collector reading the given output nodes.
    pub fn attach_collector_to_outputs(&mut self, outputs: &[usize]) -> Result<usize, FlowError> {
        for &o in outputs {
            match self.nodes.get(o) {
                Some(n) if n.kind == NodeKind::Output => {}
                _ => return Err(FlowError::NoSuchNode(o)),
            }
        }
        let dc = self.add_node(NodeKind::Collector, 0, self.collectors);
        self.collectors += 1;
        for &o in outputs {
            self.add_edge(o, dc, Capacity::Infinite, EdgeKind::Read);
        }
        Ok(dc)
    }

    pub fn nodes(&self) -> &[FlowNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn set_capacity(&mut self, edge: usize, capacity: Capacity) {
        self.edges[edge].capacity = capacity;
    }

    /// Output node of the device currently occupying `slot`.
    pub fn active_output(&self, slot: usize) -> Option<usize> {
        self.active.get(slot).map(|d| d.output)
    }

    pub fn active_outputs(&self) -> Vec<usize> {
        self.active.iter().map(|d| d.output).collect()
    }

    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == node)
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            indeg[e.to] += 1;
            adj[e.from].push(e.to);
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Exact max-flow from the source to `collector`.
    pub fn max_flow(&self, collector: usize) -> Result<MaxFlow, FlowError> {
        if collector >= self.nodes.len() || collector == Self::SOURCE {
            return Err(FlowError::NoSuchNode(collector));
        }
        let denom = self.edges.iter().fold(BigInt::one(), |acc, e| match &e.capacity {
            Capacity::Finite(r) => acc.lcm(r.denom()),
            Capacity::Infinite => acc,
        });
        let scaled: Vec<Option<BigInt>> = self
            .edges
            .iter()
            .map(|e| match &e.capacity {
                Capacity::Finite(r) => Some((r * Rational::from_integer(denom.clone())).to_integer()),
                Capacity::Infinite => None,
            })
            .collect();
        // strictly larger than any cut made only of finite edges
        let infinity: BigInt = scaled.iter().flatten().fold(BigInt::one(), |acc, c| acc + c);
        let caps: Vec<BigInt> = scaled.into_iter().map(|c| c.unwrap_or_else(|| infinity.clone())).collect();

        let mut net = Residual::new(self.nodes.len());
        for (e, cap) in self.edges.iter().zip(caps) {
            net.add_arc(e.from, e.to, cap);
        }
        let flow = net.edmonds_karp(Self::SOURCE, collector);
        if flow >= infinity {
            return Err(FlowError::Unbounded);
        }
        let source_side = net.reachable(Self::SOURCE);
        Ok(MaxFlow { value: Rational::new(flow, denom), source_side })
    }

    /// Value of the minimum source/collector cut.
    pub fn min_cut(&self, collector: usize) -> Result<Rational, FlowError> {
        self.max_flow(collector).map(|f| f.value)
    }

    /// Graphviz rendering. Nodes on the source side of `cut` are filled.
    pub fn to_dot(&self, cut: Option<&MaxFlow>) -> String {
        let mut s = String::from("digraph G {\n  rankdir=LR;\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let fill = match cut {
                Some(c) if c.source_side[i] => ", style=filled, fillcolor=lightgrey",
                _ => "",
            };
            let _ = writeln!(s, "  n{i} [label=\"{n}\"{fill}];");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Keep | EdgeKind::Store | EdgeKind::Source => ", style=dashed",
                _ => "",
            };
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"{style}];", e.from, e.to, e.capacity);
        }
        s.push_str("}\n");
        s
    }
}

/// Max-flow value and the source side of a minimum cut.
#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: Rational,
    pub source_side: Vec<bool>,
}

struct Residual {
    // (to, capacity left, index of reverse arc in adj[to])
    adj: Vec<Vec<(usize, BigInt, usize)>>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: BigInt) {
        let rf = self.adj[to].len();
        let rt = self.adj[from].len();
        self.adj[from].push((to, cap, rf));
        self.adj[to].push((from, BigInt::zero(), rt));
    }

    fn edmonds_karp(&mut self, s: usize, t: usize) -> BigInt {
        let mut total = BigInt::zero();
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for (i, (w, cap, _)) in self.adj[v].iter().enumerate() {
                    if !seen[*w] && cap > &BigInt::zero() {
                        seen[*w] = true;
                        prev[*w] = Some((v, i));
                        queue.push_back(*w);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<BigInt> = None;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                let cap = &self.adj[u][i].1;
                if bottleneck.as_ref().is_none_or(|b| cap < b) {
                    bottleneck = Some(cap.clone());
                }
                v = u;
            }
            let b = bottleneck.expect("path has at least one arc");
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                self.adj[u][i].1 -= &b;
                let (w, _, r) = self.adj[u][i];
                self.adj[w][r].1 += &b;
                v = u;
            }
            total += b;
        }
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for (w, cap, _) in &self.adj[v] {
                if !seen[*w] && cap > &BigInt::zero() {
                    seen[*w] = true;
                    stack.push(*w);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairStep {
    pub repaired: Vec<usize>,
    pub donors: Vec<usize>,
}

/// A sequence of coordinated repairs over `params.n` device slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairHistory {
    pub params: CodeParams,
    pub steps: Vec<RepairStep>,
}

impl RepairHistory {
    pub fn new(params: CodeParams) -> Self {
        Self { params, steps: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.params.validate()?;
        let CodeParams { n, d, t, .. } = self.params;
        for (i, step) in self.steps.iter().enumerate() {
            let bad = |msg: String| Err(FlowError::InvalidHistory(format!("step {}: {msg}", i + 1)));
            if step.repaired.len() != t {
                return bad(format!("{} devices repaired, expected t = {t}", step.repaired.len()));
            }
            if step.donors.len() != d {
                return bad(format!("{} donors, expected d = {d}", step.donors.len()));
            }
            let mut seen = vec![false; n];
            for &j in step.repaired.iter().chain(&step.donors) {
                if j >= n {
                    return bad(format!("device {j} out of range"));
                }
                if seen[j] {
                    return bad(format!("device {j} listed twice or both failed and donor"));
                }
                seen[j] = true;
            }
        }
        Ok(())
    }

    /// Seeded random history: failures uniform over the `n` slots, donors
    /// uniform over the remaining ones.
    pub fn random(params: CodeParams, steps: usize, seed: u64) -> Result<Self, FlowError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Self::new(params);
        let CodeParams { n, d, t, .. } = h.params;
        for _ in 0..steps {
            let picked = index::sample(&mut rng, n, t + d).into_vec();
            let mut repaired = picked[..t].to_vec();
            let mut donors = picked[t..].to_vec();
            repaired.sort_unstable();
            donors.sort_unstable();
            h.steps.push(RepairStep { repaired, donors });
        }
        Ok(h)
    }
}

/// Information flow graph of a repair history (no collector attached).
pub fn build_graph(h: &RepairHistory, c: &CostPoint) -> Result<FlowGraph, FlowError> {
    h.validate()?;
    let mut g = FlowGraph::with_initial_devices(h.params.n, &c.alpha);
    for (i, step) in h.steps.iter().enumerate() {
        g.apply_repair(i + 1, &step.repaired, &step.donors, c);
    }
    Ok(g)
}

/// Graph realizing recovery scenario `u` as a repair history, with the
/// collector attached.
#[derive(Debug, Clone)]
pub struct WorstCaseGraph {
    pub graph: FlowGraph,
    pub collector: usize,
    pub history: RepairHistory,
    /// Slots read by the collector, grouped by repair.
    pub groups: Vec<Vec<usize>>,
}

/// Builds the graph on which scenario `s` is tight: devices of group `i`
/// collect from every contacted device of the earlier groups plus
/// `d - sum_{j<i} u_j` fresh initial devices, and only `u_i` of the `t`
/// devices of each repair are read by the collector.
pub fn build_worst_case(p: &CodeParams, c: &CostPoint, s: &RecoveryScenario) -> Result<WorstCaseGraph, FlowError> {
    p.validate()?;
    s.validate(p.k, p.t).map_err(|e| FlowError::InvalidScenario(e.to_string()))?;
    let (d, t) = (p.d, p.t);
    let mut before = 0;
    let mut pool = 0;
    for &u in s.parts() {
        pool += t + (d - before);
        before += u;
    }
    let mut params = p.clone();
    params.n = pool.max(d + t);

    let mut history = RepairHistory::new(params);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    let mut fresh = |count: usize| {
        let r: Vec<usize> = (next..next + count).collect();
        next += count;
        r
    };
    for &u in s.parts() {
        let repaired = fresh(t);
        let earlier: Vec<usize> = groups.iter().flatten().copied().collect();
        let mut donors = earlier.clone();
        donors.extend(fresh(d - earlier.len()));
        groups.push(repaired[..u].to_vec());
        history.steps.push(RepairStep { repaired, donors });
    }
    let mut graph = build_graph(&history, c)?;
    let read: Vec<usize> = groups.iter().flatten().copied().collect();
    let collector = graph.attach_collector(&read)?;
    Ok(WorstCaseGraph { graph, collector, history, groups })
}

/// Closed-form cut value of scenario `s`.
pub fn cut_formula(p: &CodeParams, c: &CostPoint, s: &RecoveryScenario) -> Result<Rational, FlowError> {
    s.validate(p.k, p.t).map_err(|e| FlowError::InvalidScenario(e.to_string()))?;
    Ok(scenario_flow(p.d, p.t, s, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::{enumerate_scenarios, mbcr, mscr};
    use crate::ratio::{int, rat};

    fn scen(v: &[usize]) -> RecoveryScenario {
        RecoveryScenario::new(v.to_vec(), v.iter().sum(), *v.iter().max().unwrap()).unwrap()
    }

    #[test]
    fn empty_history_has_three_nodes_per_device() {
        let p = CodeParams::with_n(5, 2, 2, 1, int(2)).unwrap();
        let c = mscr(&p).unwrap();
        let g = build_graph(&RepairHistory::new(p), &c).unwrap();
        assert_eq!(g.nodes().len(), 3 * 5 + 1);
        assert!(g.edges().iter().all(|e| !matches!(e.kind, EdgeKind::Collect | EdgeKind::Coordinate)));
        assert!(g.topological_order().is_some());
    }

    #[test]
    fn single_repair_degrees() {
        let p = CodeParams::with_n(9, 3, 5, 3, int(3)).unwrap();
        let c = mscr(&p).unwrap();
        let mut h = RepairHistory::new(p);
        h.steps.push(RepairStep { repaired: vec![0, 1, 2], donors: vec![3, 4, 5, 6, 7] });
        let g = build_graph(&h, &c).unwrap();
        for (i, node) in g.nodes().iter().enumerate() {
            if node.repair_step != 1 {
                continue;
            }
            let ins: Vec<&Edge> = g.in_edges(i).collect();
            match node.kind {
                NodeKind::Input => {
                    assert_eq!(ins.len(), 5);
                    assert!(ins.iter().all(|e| e.kind == EdgeKind::Collect && e.capacity == Capacity::Finite(c.beta.clone())));
                }
                NodeKind::Coordination => {
                    assert_eq!(ins.iter().filter(|e| e.kind == EdgeKind::Coordinate).count(), 2);
                    assert_eq!(ins.iter().filter(|e| e.capacity == Capacity::Infinite).count(), 1);
                }
                NodeKind::Output => assert_eq!(ins.len(), 1),
                _ => unreachable!(),
            }
        }
        // failed devices are no longer reachable as donors or outputs
        assert_eq!(g.nodes()[g.active_output(0).unwrap()].repair_step, 1);
        assert_eq!(g.nodes()[g.active_output(3).unwrap()].repair_step, 0);
    }

    #[test]
    fn history_validation() {
        let p = CodeParams::with_n(6, 2, 3, 2, int(2)).unwrap();
        let mut h = RepairHistory::new(p);
        h.steps.push(RepairStep { repaired: vec![0, 1], donors: vec![1, 2, 3] });
        assert!(matches!(h.validate(), Err(FlowError::InvalidHistory(_))));
        h.steps[0] = RepairStep { repaired: vec![0], donors: vec![1, 2, 3] };
        assert!(matches!(h.validate(), Err(FlowError::InvalidHistory(_))));
        h.steps[0] = RepairStep { repaired: vec![0, 9], donors: vec![1, 2, 3] };
        assert!(matches!(h.validate(), Err(FlowError::InvalidHistory(_))));
    }

    #[test]
    fn single_chain_bottleneck() {
        let mut g = FlowGraph::with_initial_devices(1, &rat(3, 7));
        let dc = g.attach_collector(&[0]).unwrap();
        assert_eq!(g.min_cut(dc).unwrap(), rat(3, 7));
    }

    #[test]
    fn disconnected_collector_has_zero_flow() {
        let mut g = FlowGraph::with_initial_devices(1, &rat(1, 2));
        let dc = g.attach_collector(&[]).unwrap();
        assert_eq!(g.min_cut(dc).unwrap(), Rational::zero());
        assert_eq!(g.min_cut(999), Err(FlowError::NoSuchNode(999)));
    }

    #[test]
    fn small_mscr_cuts_by_hand() {
        let p = CodeParams::new(2, 2, 2, int(1)).unwrap();
        let c = mscr(&p).unwrap();
        assert_eq!((c.alpha.clone(), c.beta.clone()), (rat(1, 2), rat(1, 4)));
        for s in [scen(&[2]), RecoveryScenario::new(vec![1, 1], 2, 2).unwrap()] {
            let w = build_worst_case(&p, &c, &s).unwrap();
            assert_eq!(w.graph.min_cut(w.collector).unwrap(), int(1));
            assert_eq!(cut_formula(&p, &c, &s).unwrap(), int(1));
        }
    }

    #[test]
    fn worst_case_shapes() {
        let p = CodeParams::new(9, 9, 3, int(9)).unwrap();
        let c = mbcr(&p).unwrap();
        let w = build_worst_case(&p, &c, &scen(&[3, 3, 3])).unwrap();
        assert_eq!(w.groups, vec![vec![0, 1, 2], vec![12, 13, 14], vec![21, 22, 23]]);
        // second group draws from all three devices of the first
        assert!(w.groups[0].iter().all(|j| w.history.steps[1].donors.contains(j)));

        let p6 = CodeParams::new(6, 7, 3, int(6)).unwrap();
        let c6 = mscr(&p6).unwrap();
        let w3 = build_worst_case(&p6, &c6, &RecoveryScenario::new(vec![2, 1, 3], 6, 3).unwrap()).unwrap();
        assert_eq!(w3.groups.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 1, 3]);
        assert_eq!(w3.graph.min_cut(w3.collector).unwrap(), int(6));
        assert!(build_worst_case(&p6, &c6, &RecoveryScenario::singletons(5)).is_err());
    }

    #[test]
    fn binding_cuts_equal_file_size() {
        let p = CodeParams::new(32, 36, 4, int(32)).unwrap();
        let s = mscr(&p).unwrap();
        assert_eq!(cut_formula(&p, &s, &RecoveryScenario::full_groups(32, 4)).unwrap(), int(32));
        let b = mbcr(&p).unwrap();
        assert_eq!(cut_formula(&p, &b, &RecoveryScenario::singletons(32)).unwrap(), int(32));
        let zero = CostPoint::new(Rational::zero(), int(1), int(1), p.d, p.t);
        assert_eq!(cut_formula(&p, &zero, &RecoveryScenario::singletons(32)).unwrap(), Rational::zero());
    }

    #[test]
    fn oracle_matches_formula_on_small_grid() {
        for (k, t) in [(2, 1), (2, 2), (4, 2), (6, 3)] {
            for d in k..=k + 2 {
                let p = CodeParams::new(k, d, t, int(k as i64 * 7)).unwrap();
                for c in [mscr(&p).unwrap(), mbcr(&p).unwrap()] {
                    for s in enumerate_scenarios(k, t).unwrap() {
                        let w = build_worst_case(&p, &c, &s).unwrap();
                        assert_eq!(w.graph.min_cut(w.collector).unwrap(), cut_formula(&p, &c, &s).unwrap(), "k={k} d={d} t={t} u={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn dot_output_mentions_every_edge() {
        let p = CodeParams::new(2, 2, 2, int(1)).unwrap();
        let c = mscr(&p).unwrap();
        let w = build_worst_case(&p, &c, &scen(&[2])).unwrap();
        let flow = w.graph.max_flow(w.collector).unwrap();
        let dot = w.graph.to_dot(Some(&flow));
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), w.graph.edges().len());
        assert!(dot.contains("fillcolor"));
    }
}
