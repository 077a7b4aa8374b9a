//! Hybrid AC/DC network topology.
//!
//! A network is a set of AC and DC subsystems. Each subsystem is a connected
//! graph of buses of a single domain; subsystems meet only at interlinking
//! converters (ILCs), each of which pairs one AC converter bus with one DC
//! bus. A separate undirected communication graph links the buses that take
//! part in the distributed secondary controller.
//!
//! All quantities are per-unit deviations from nominal, except frequencies
//! which are deviations in rad/s.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    /// AC bus with a synchronous machine (or any inertial load bus).
    AcGenerator,
    /// AC-side terminal of an interlinking converter. Carries no inertia.
    AcConverter,
    Dc,
}

impl BusKind {
    pub fn domain(self) -> Domain {
        match self {
            BusKind::AcGenerator | BusKind::AcConverter => Domain::Ac,
            BusKind::Dc => Domain::Dc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Ac,
    Dc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    pub subsystem: String,
    /// Inertia M_j, AC generator buses only.
    #[serde(rename = "inertia_pu_s2", default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    /// Damping D_j, AC generator buses only.
    #[serde(rename = "damping_pu_per_rad_s", default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    /// Capacitance C_j, DC buses only.
    #[serde(rename = "c_pu_s", default, skip_serializing_if = "Option::is_none")]
    pub capacitance: Option<f64>,
    /// Inverse cost / droop gain (diagonal entry of the inverse cost matrix).
    #[serde(rename = "q_pu_per_rad_s", default)]
    pub inverse_cost: f64,
    /// Nominal constant-power load.
    #[serde(rename = "load_pu", default)]
    pub load: f64,
}

impl Bus {
    pub fn ac_generator(id: &str, subsystem: &str, inertia: f64, damping: f64, q: f64) -> Self {
        Bus {
            id: id.to_owned(),
            kind: BusKind::AcGenerator,
            subsystem: subsystem.to_owned(),
            inertia: Some(inertia),
            damping: Some(damping),
            capacitance: None,
            inverse_cost: q,
            load: 0.0,
        }
    }

    pub fn ac_converter(id: &str, subsystem: &str) -> Self {
        Bus {
            id: id.to_owned(),
            kind: BusKind::AcConverter,
            subsystem: subsystem.to_owned(),
            inertia: None,
            damping: None,
            capacitance: None,
            inverse_cost: 0.0,
            load: 0.0,
        }
    }

    pub fn dc(id: &str, subsystem: &str, capacitance: f64, q: f64) -> Self {
        Bus {
            id: id.to_owned(),
            kind: BusKind::Dc,
            subsystem: subsystem.to_owned(),
            inertia: None,
            damping: None,
            capacitance: Some(capacitance),
            inverse_cost: q,
            load: 0.0,
        }
    }

    pub fn with_load(mut self, load: f64) -> Self {
        self.load = load;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub kind: Domain,
    /// Susceptance B_ij (AC lines).
    #[serde(rename = "b_pu", default, skip_serializing_if = "Option::is_none")]
    pub susceptance: Option<f64>,
    /// Conductance G_ij (DC lines).
    #[serde(rename = "g_pu", default, skip_serializing_if = "Option::is_none")]
    pub conductance: Option<f64>,
}

impl Line {
    pub fn ac(from: &str, to: &str, b: f64) -> Self {
        Line { from: from.to_owned(), to: to.to_owned(), kind: Domain::Ac, susceptance: Some(b), conductance: None }
    }

    pub fn dc(from: &str, to: &str, g: f64) -> Self {
        Line { from: from.to_owned(), to: to.to_owned(), kind: Domain::Dc, susceptance: None, conductance: Some(g) }
    }

    fn weight(&self) -> Option<f64> {
        match self.kind {
            Domain::Ac => self.susceptance,
            Domain::Dc => self.conductance,
        }
    }

    fn label(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }
}

/// An interlinking converter between an AC converter bus and a DC bus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Converter {
    pub id: String,
    pub ac_bus: String,
    pub dc_bus: String,
}

impl Converter {
    pub fn new(id: &str, ac_bus: &str, dc_bus: &str) -> Self {
        Converter { id: id.to_owned(), ac_bus: ac_bus.to_owned(), dc_bus: dc_bus.to_owned() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub converters: Vec<Converter>,
    /// Undirected communication links.
    #[serde(default)]
    pub comm_edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subsystem {
    pub name: String,
    pub domain: Domain,
    /// Bus indices, in input order.
    pub buses: Vec<usize>,
    /// Line indices, in input order.
    pub lines: Vec<usize>,
}

/// Resolved line with bus indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub domain: Domain,
}

/// Resolved converter with bus indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConverterRef {
    pub ac_bus: usize,
    pub dc_bus: usize,
}

/// A network that passed validation, together with the contiguous index maps
/// used for the state vector: one η slot per AC line, one ω slot per AC
/// generator bus, one V slot per DC bus and one ξ slot per communication node.
///
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct ValidatedNetwork {
    spec: NetworkSpec,
    bus_index: HashMap<String, usize>,
    subsystems: Vec<Subsystem>,
    bus_subsystem: Vec<usize>,
    edges: Vec<Edge>,
    ac_edges: Vec<usize>,
    generators: Vec<usize>,
    dc_buses: Vec<usize>,
    converters: Vec<ConverterRef>,
    comm_nodes: Vec<usize>,
    comm_links: Vec<(usize, usize)>,
    comm_unreachable: Option<usize>,
    gen_slot: Vec<Option<usize>>,
    dc_slot: Vec<Option<usize>>,
    comm_slot: Vec<Option<usize>>,
    converter_at_ac: Vec<Option<usize>>,
}

fn invalid(element: &str, field: &'static str, reason: impl Into<String>) -> NetworkError {
    NetworkError::InvalidParameter { element: element.to_owned(), field, reason: reason.into() }
}

fn check_positive(element: &str, field: &'static str, v: Option<f64>) -> Result<f64, NetworkError> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(invalid(element, field, format!("must be > 0, got {x}"))),
        None => Err(invalid(element, field, "missing")),
    }
}

/// Validates a network description and builds its index maps.
pub fn validate_network(spec: &NetworkSpec) -> Result<ValidatedNetwork, NetworkError> {
    let mut bus_index = HashMap::new();
    for (i, bus) in spec.buses.iter().enumerate() {
        if bus_index.insert(bus.id.clone(), i).is_some() {
            return Err(NetworkError::DuplicateId(bus.id.clone()));
        }
    }

    for bus in &spec.buses {
        let id = bus.id.as_str();
        if !bus.inverse_cost.is_finite() || bus.inverse_cost < 0.0 {
            return Err(invalid(id, "q_pu_per_rad_s", "must be finite and >= 0"));
        }
        if !bus.load.is_finite() {
            return Err(invalid(id, "load_pu", "must be finite"));
        }
        match bus.kind {
            BusKind::AcGenerator => {
                check_positive(id, "inertia_pu_s2", bus.inertia)?;
                match bus.damping {
                    Some(d) if d.is_finite() && d >= 0.0 => {}
                    _ => return Err(invalid(id, "damping_pu_per_rad_s", "must be present and >= 0")),
                }
                if bus.capacitance.is_some() {
                    return Err(invalid(id, "c_pu_s", "only DC buses carry capacitance"));
                }
            }
            BusKind::AcConverter => {
                if bus.inertia.is_some() || bus.damping.is_some() || bus.capacitance.is_some() {
                    return Err(invalid(id, "kind", "AC converter buses carry no inertia, damping or capacitance"));
                }
                if bus.inverse_cost != 0.0 {
                    return Err(NetworkError::NonzeroCostAtConverterBus(bus.id.clone()));
                }
            }
            BusKind::Dc => {
                check_positive(id, "c_pu_s", bus.capacitance)?;
                if bus.inertia.is_some() || bus.damping.is_some() {
                    return Err(invalid(id, "inertia_pu_s2", "only AC generator buses carry inertia"));
                }
            }
        }
    }

    // Subsystems in order of first appearance.
    let mut subsystems: Vec<Subsystem> = Vec::new();
    let mut bus_subsystem = Vec::with_capacity(spec.buses.len());
    for (i, bus) in spec.buses.iter().enumerate() {
        let k = match subsystems.iter().position(|s| s.name == bus.subsystem) {
            Some(k) => k,
            None => {
                subsystems.push(Subsystem {
                    name: bus.subsystem.clone(),
                    domain: bus.kind.domain(),
                    buses: Vec::new(),
                    lines: Vec::new(),
                });
                subsystems.len() - 1
            }
        };
        if subsystems[k].domain != bus.kind.domain() {
            return Err(NetworkError::MixedSubsystem(bus.subsystem.clone()));
        }
        subsystems[k].buses.push(i);
        bus_subsystem.push(k);
    }

    let mut edges = Vec::with_capacity(spec.lines.len());
    for (li, line) in spec.lines.iter().enumerate() {
        let from = *bus_index.get(&line.from).ok_or_else(|| NetworkError::UnknownBus(line.from.clone()))?;
        let to = *bus_index.get(&line.to).ok_or_else(|| NetworkError::UnknownBus(line.to.clone()))?;
        let df = spec.buses[from].kind.domain();
        let dt = spec.buses[to].kind.domain();
        if df != dt || df != line.kind {
            return Err(NetworkError::MixedDomainLine { from: line.from.clone(), to: line.to.clone() });
        }
        if from == to {
            return Err(invalid(&line.label(), "to", "self-loop"));
        }
        if bus_subsystem[from] != bus_subsystem[to] {
            return Err(NetworkError::CrossSubsystemLine { from: line.from.clone(), to: line.to.clone() });
        }
        let (field, other) = match line.kind {
            Domain::Ac => ("b_pu", line.conductance.is_some()),
            Domain::Dc => ("g_pu", line.susceptance.is_some()),
        };
        if other {
            return Err(invalid(&line.label(), field, "AC lines take b_pu, DC lines take g_pu"));
        }
        let weight = check_positive(&line.label(), field, line.weight())?;
        subsystems[bus_subsystem[from]].lines.push(li);
        edges.push(Edge { from, to, weight, domain: line.kind });
    }

    let mut converter_at_ac = vec![None; spec.buses.len()];
    let mut converters = Vec::with_capacity(spec.converters.len());
    let mut conv_ids = BTreeSet::new();
    for (xi, conv) in spec.converters.iter().enumerate() {
        if !conv_ids.insert(conv.id.as_str()) {
            return Err(NetworkError::DuplicateId(conv.id.clone()));
        }
        let ac = *bus_index
            .get(&conv.ac_bus)
            .ok_or_else(|| NetworkError::DanglingConverter(format!("{}: unknown AC bus `{}`", conv.id, conv.ac_bus)))?;
        let dc = *bus_index
            .get(&conv.dc_bus)
            .ok_or_else(|| NetworkError::DanglingConverter(format!("{}: unknown DC bus `{}`", conv.id, conv.dc_bus)))?;
        if spec.buses[ac].kind != BusKind::AcConverter {
            return Err(NetworkError::DanglingConverter(format!(
                "{}: `{}` is not an AC converter bus",
                conv.id, conv.ac_bus
            )));
        }
        if spec.buses[dc].kind != BusKind::Dc {
            return Err(NetworkError::DanglingConverter(format!("{}: `{}` is not a DC bus", conv.id, conv.dc_bus)));
        }
        if converter_at_ac[ac].is_some() {
            return Err(NetworkError::DanglingConverter(format!(
                "AC converter bus `{}` is shared by several converters",
                conv.ac_bus
            )));
        }
        converter_at_ac[ac] = Some(xi);
        converters.push(ConverterRef { ac_bus: ac, dc_bus: dc });
    }
    for (i, bus) in spec.buses.iter().enumerate() {
        if bus.kind == BusKind::AcConverter && converter_at_ac[i].is_none() {
            return Err(NetworkError::DanglingConverter(format!("AC converter bus `{}` has no converter", bus.id)));
        }
    }

    for sub in &subsystems {
        let links: Vec<(usize, usize)> = sub.lines.iter().map(|&l| (edges[l].from, edges[l].to)).collect();
        if let Some(bus) = first_unreachable(&sub.buses, &links) {
            return Err(NetworkError::DisconnectedSubsystem {
                subsystem: sub.name.clone(),
                bus: spec.buses[bus].id.clone(),
            });
        }
    }

    // Communication graph: every bus with q > 0 plus every endpoint of a link.
    let mut comm_members = BTreeSet::new();
    let mut raw_links = Vec::with_capacity(spec.comm_edges.len());
    let mut seen_links = BTreeSet::new();
    for (a, b) in &spec.comm_edges {
        let ia = *bus_index.get(a).ok_or_else(|| NetworkError::UnknownBus(a.clone()))?;
        let ib = *bus_index.get(b).ok_or_else(|| NetworkError::UnknownBus(b.clone()))?;
        if ia == ib {
            return Err(invalid(a, "comm_edges", "self-loop"));
        }
        if !seen_links.insert((ia.min(ib), ia.max(ib))) {
            return Err(invalid(&format!("{a}-{b}"), "comm_edges", "duplicate link"));
        }
        comm_members.insert(ia);
        comm_members.insert(ib);
        raw_links.push((ia, ib));
    }
    for (i, bus) in spec.buses.iter().enumerate() {
        if bus.inverse_cost > 0.0 {
            comm_members.insert(i);
        }
    }
    let comm_nodes: Vec<usize> = comm_members.into_iter().collect();
    let comm_unreachable = first_unreachable(&comm_nodes, &raw_links);
    let mut comm_slot = vec![None; spec.buses.len()];
    for (s, &b) in comm_nodes.iter().enumerate() {
        comm_slot[b] = Some(s);
    }
    let comm_links = raw_links.iter().map(|&(a, b)| (comm_slot[a].unwrap(), comm_slot[b].unwrap())).collect();

    let ac_edges: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].domain == Domain::Ac).collect();
    let generators: Vec<usize> =
        (0..spec.buses.len()).filter(|&i| spec.buses[i].kind == BusKind::AcGenerator).collect();
    let dc_buses: Vec<usize> = (0..spec.buses.len()).filter(|&i| spec.buses[i].kind == BusKind::Dc).collect();
    let mut gen_slot = vec![None; spec.buses.len()];
    for (s, &b) in generators.iter().enumerate() {
        gen_slot[b] = Some(s);
    }
    let mut dc_slot = vec![None; spec.buses.len()];
    for (s, &b) in dc_buses.iter().enumerate() {
        dc_slot[b] = Some(s);
    }

    Ok(ValidatedNetwork {
        spec: spec.clone(),
        bus_index,
        subsystems,
        bus_subsystem,
        edges,
        ac_edges,
        generators,
        dc_buses,
        converters,
        comm_nodes,
        comm_links,
        comm_unreachable,
        gen_slot,
        dc_slot,
        comm_slot,
        converter_at_ac,
    })
}

/// Returns the first node (in `nodes` order) not reachable from `nodes[0]`.
fn first_unreachable(nodes: &[usize], links: &[(usize, usize)]) -> Option<usize> {
    let first = *nodes.first()?;
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in links {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    nodes.iter().copied().find(|n| !seen.contains(n))
}

impl ValidatedNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn bus_count(&self) -> usize {
        self.spec.buses.len()
    }

    pub fn bus(&self, i: usize) -> &Bus {
        &self.spec.buses[i]
    }

    pub fn bus_id(&self, i: usize) -> &str {
        &self.spec.buses[i].id
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem_of(&self, bus: usize) -> usize {
        self.bus_subsystem[bus]
    }

    pub fn subsystem_index(&self, name: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.name == name)
    }

    /// Indices (into [`Self::subsystems`]) of the DC subsystems, in order.
    pub fn dc_subsystems(&self) -> Vec<usize> {
        (0..self.subsystems.len()).filter(|&k| self.subsystems[k].domain == Domain::Dc).collect()
    }

    pub fn ac_subsystems(&self) -> Vec<usize> {
        (0..self.subsystems.len()).filter(|&k| self.subsystems[k].domain == Domain::Ac).collect()
    }

    /// All resolved lines in input order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Line indices of the AC lines, i.e. the η ordering.
    pub fn ac_edges(&self) -> &[usize] {
        &self.ac_edges
    }

    pub fn edge_label(&self, e: usize) -> String {
        self.spec.lines[e].label()
    }

    /// AC generator bus indices, i.e. the ω^G ordering.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    /// DC bus indices, i.e. the V ordering.
    pub fn dc_buses(&self) -> &[usize] {
        &self.dc_buses
    }

    pub fn converters(&self) -> &[ConverterRef] {
        &self.converters
    }

    pub fn converter_id(&self, x: usize) -> &str {
        &self.spec.converters[x].id
    }

    /// Communication node bus indices, i.e. the ξ ordering.
    pub fn comm_nodes(&self) -> &[usize] {
        &self.comm_nodes
    }

    pub fn gen_slot(&self, bus: usize) -> Option<usize> {
        self.gen_slot[bus]
    }

    pub fn dc_slot(&self, bus: usize) -> Option<usize> {
        self.dc_slot[bus]
    }

    pub fn comm_slot(&self, bus: usize) -> Option<usize> {
        self.comm_slot[bus]
    }

    pub fn converter_at(&self, ac_bus: usize) -> Option<usize> {
        self.converter_at_ac[ac_bus]
    }

    /// Diagonal of the inverse cost matrix, one entry per bus.
    pub fn q_tilde(&self) -> Vec<f64> {
        self.spec.buses.iter().map(|b| b.inverse_cost).collect()
    }

    /// Nominal loads, one entry per bus.
    pub fn nominal_loads(&self) -> Vec<f64> {
        self.spec.buses.iter().map(|b| b.load).collect()
    }

    pub fn capacitance(&self, bus: usize) -> f64 {
        self.spec.buses[bus].capacitance.unwrap_or(0.0)
    }

    pub fn inertia(&self, bus: usize) -> f64 {
        self.spec.buses[bus].inertia.unwrap_or(0.0)
    }

    pub fn damping(&self, bus: usize) -> f64 {
        self.spec.buses[bus].damping.unwrap_or(0.0)
    }

    /// Signed incidence matrix of one subsystem: rows are the subsystem's
    /// buses, columns its lines; the column of line (i→j) has +1 at i and -1 at j.
    pub fn incidence_matrix(&self, subsystem: &str) -> Result<DMatrix<f64>, NetworkError> {
        let k = self.subsystem_index(subsystem).ok_or_else(|| NetworkError::UnknownSubsystem(subsystem.to_owned()))?;
        let sub = &self.subsystems[k];
        let row = |bus: usize| sub.buses.iter().position(|&b| b == bus).unwrap();
        let mut a = DMatrix::zeros(sub.buses.len(), sub.lines.len());
        for (c, &l) in sub.lines.iter().enumerate() {
            a[(row(self.edges[l].from), c)] = 1.0;
            a[(row(self.edges[l].to), c)] = -1.0;
        }
        Ok(a)
    }

    /// Conductance-weighted Laplacian of one DC subsystem.
    pub fn dc_conductance_matrix(&self, subsystem: &str) -> Result<DMatrix<f64>, NetworkError> {
        let k = self
            .subsystem_index(subsystem)
            .filter(|&k| self.subsystems[k].domain == Domain::Dc)
            .ok_or_else(|| NetworkError::UnknownSubsystem(subsystem.to_owned()))?;
        let sub = &self.subsystems[k];
        let row = |bus: usize| sub.buses.iter().position(|&b| b == bus).unwrap();
        let mut g = DMatrix::zeros(sub.buses.len(), sub.buses.len());
        for &l in &sub.lines {
            let e = self.edges[l];
            let (i, j) = (row(e.from), row(e.to));
            g[(i, i)] += e.weight;
            g[(j, j)] += e.weight;
            g[(i, j)] -= e.weight;
            g[(j, i)] -= e.weight;
        }
        Ok(g)
    }

    /// Unweighted Laplacian of the communication graph over the ξ ordering.
    pub fn comm_laplacian(&self) -> DMatrix<f64> {
        let n = self.comm_nodes.len();
        let mut l = DMatrix::zeros(n, n);
        for &(a, b) in &self.comm_links {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
        }
        l
    }

    /// Fails if some communication node cannot be reached from the others.
    /// Only secondary control needs a connected communication graph.
    pub fn check_comm_connected(&self) -> Result<(), NetworkError> {
        match self.comm_unreachable {
            Some(b) => Err(NetworkError::DisconnectedCommGraph(self.bus_id(b).to_owned())),
            None => Ok(()),
        }
    }

    /// Communication links as pairs of ξ slots.
    pub fn comm_links(&self) -> &[(usize, usize)] {
        &self.comm_links
    }

    /// Copy of this network with every DC line conductance divided by `scale`
    /// (that is, every DC resistance multiplied by `scale`).
    pub fn with_dc_resistance_scaled(&self, scale: f64) -> Result<ValidatedNetwork, NetworkError> {
        validate_network(&scale_dc_resistance(&self.spec, scale))
    }
}

/// Multiplies every DC line resistance by `scale`.
pub fn scale_dc_resistance(spec: &NetworkSpec, scale: f64) -> NetworkSpec {
    let mut spec = spec.clone();
    for line in &mut spec.lines {
        if let Some(g) = line.conductance.as_mut() {
            *g /= scale;
        }
    }
    spec
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two AC buses, two DC buses, one converter, complete communication graph.
    pub(crate) fn t1_spec() -> NetworkSpec {
        NetworkSpec {
            buses: vec![
                Bus::ac_generator("a1", "ac", 1.0, 1.0, 1.0),
                Bus::ac_converter("a2", "ac"),
                Bus::dc("d1", "dc", 1.0, 0.0),
                Bus::dc("d2", "dc", 1.0, 1.0),
            ],
            lines: vec![Line::ac("a1", "a2", 10.0), Line::dc("d1", "d2", 100.0)],
            converters: vec![Converter::new("x1", "a2", "d1")],
            comm_edges: [("a1", "a2"), ("a1", "d1"), ("a1", "d2"), ("a2", "d1"), ("a2", "d2"), ("d1", "d2")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    #[test]
    fn t1_validates_with_contiguous_slots() {
        let net = validate_network(&t1_spec()).unwrap();
        assert_eq!(net.ac_edges(), &[0]);
        assert_eq!(net.generators(), &[0]);
        assert_eq!(net.dc_buses(), &[2, 3]);
        assert_eq!(net.comm_nodes(), &[0, 1, 2, 3]);
        assert_eq!(net.dc_slot(3), Some(1));
        assert_eq!(net.converter_at(1), Some(0));
    }

    #[test]
    fn removing_dc_line_disconnects_d2() {
        let mut spec = t1_spec();
        spec.lines.pop();
        assert_eq!(
            validate_network(&spec).unwrap_err(),
            NetworkError::DisconnectedSubsystem { subsystem: "dc".into(), bus: "d2".into() }
        );
    }

    #[test]
    fn ac_to_dc_line_is_rejected() {
        let mut spec = t1_spec();
        spec.lines.push(Line::ac("a1", "d2", 1.0));
        assert!(matches!(validate_network(&spec), Err(NetworkError::MixedDomainLine { .. })));
    }

    #[test]
    fn converter_bus_with_cost_is_rejected() {
        let mut spec = t1_spec();
        spec.buses[1].inverse_cost = 0.5;
        assert_eq!(validate_network(&spec).unwrap_err(), NetworkError::NonzeroCostAtConverterBus("a2".into()));
    }

    #[test]
    fn converter_must_pair_ac_converter_with_dc() {
        let mut spec = t1_spec();
        spec.converters[0].dc_bus = "a1".into();
        assert!(matches!(validate_network(&spec), Err(NetworkError::DanglingConverter(_))));

        let mut spec = t1_spec();
        spec.converters.clear();
        assert!(matches!(validate_network(&spec), Err(NetworkError::DanglingConverter(_))));
    }

    #[test]
    fn comm_graph_must_reach_every_source() {
        let mut spec = t1_spec();
        spec.comm_edges = vec![("a1".into(), "a2".into())];
        assert_eq!(
            validate_network(&spec).unwrap().check_comm_connected().unwrap_err(),
            NetworkError::DisconnectedCommGraph("d2".into())
        );
        assert!(validate_network(&t1_spec()).unwrap().check_comm_connected().is_ok());
    }

    #[test]
    fn negative_capacitance_is_rejected() {
        let mut spec = t1_spec();
        spec.buses[2].capacitance = Some(-1.0);
        assert!(matches!(validate_network(&spec), Err(NetworkError::InvalidParameter { field: "c_pu_s", .. })));
    }

    #[test]
    fn revalidation_is_idempotent() {
        let net = validate_network(&t1_spec()).unwrap();
        let again = validate_network(net.spec()).unwrap();
        assert_eq!(net.spec(), again.spec());
        assert_eq!(net.comm_laplacian(), again.comm_laplacian());
    }

    #[test]
    fn two_bus_incidence_column() {
        let net = validate_network(&t1_spec()).unwrap();
        let a = net.incidence_matrix("ac").unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 1, &[1.0, -1.0]));
        assert!(matches!(net.incidence_matrix("nope"), Err(NetworkError::UnknownSubsystem(_))));
    }

    fn path3() -> NetworkSpec {
        NetworkSpec {
            buses: vec![
                Bus::ac_generator("a", "ac", 1.0, 0.0, 1.0),
                Bus::ac_generator("b", "ac", 1.0, 0.0, 1.0),
                Bus::ac_generator("c", "ac", 1.0, 0.0, 1.0),
                Bus::dc("p", "dc", 1.0, 1.0),
                Bus::dc("q", "dc", 1.0, 0.0),
                Bus::dc("r", "dc", 1.0, 0.0),
            ],
            lines: vec![
                Line::ac("a", "b", 1.0),
                Line::ac("b", "c", 1.0),
                Line::dc("p", "q", 10.0),
                Line::dc("q", "r", 20.0),
            ],
            converters: vec![],
            comm_edges: vec![("a".into(), "b".into()), ("b".into(), "c".into()), ("c".into(), "p".into())],
        }
    }

    #[test]
    fn three_bus_path_incidence() {
        let net = validate_network(&path3()).unwrap();
        let a = net.incidence_matrix("ac").unwrap();
        let expected = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]);
        assert_eq!(a, expected);
    }

    #[test]
    fn conductance_matrices() {
        let net = validate_network(&t1_spec()).unwrap();
        let g = net.dc_conductance_matrix("dc").unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[100.0, -100.0, -100.0, 100.0]));
        assert!(net.dc_conductance_matrix("ac").is_err());

        let net = validate_network(&path3()).unwrap();
        let g = net.dc_conductance_matrix("dc").unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[10.0, -10.0, 0.0, -10.0, 30.0, -20.0, 0.0, -20.0, 20.0]);
        assert_eq!(g, expected);
    }

    #[test]
    fn comm_laplacians() {
        let net = validate_network(&path3()).unwrap();
        let l = net.comm_laplacian();
        // comm nodes: a, b, c, p
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, -1.0, 0.0, 0.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                0.0, 0.0, -1.0, 1.0,
            ],
        );
        assert_eq!(l, expected);

        let single = NetworkSpec { buses: vec![Bus::ac_generator("g", "ac", 1.0, 0.0, 1.0)], ..Default::default() };
        let net = validate_network(&single).unwrap();
        assert_eq!(net.comm_laplacian(), DMatrix::from_element(1, 1, 0.0));

        let mut k3 = path3();
        k3.buses.truncate(3);
        k3.lines.truncate(2);
        k3.comm_edges = vec![("a".into(), "b".into()), ("b".into(), "c".into()), ("a".into(), "c".into())];
        let net = validate_network(&k3).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        assert_eq!(net.comm_laplacian(), expected);
    }

    #[test]
    fn resistance_scaling_divides_conductance() {
        let net = validate_network(&t1_spec()).unwrap();
        let scaled = net.with_dc_resistance_scaled(0.1).unwrap();
        assert!((scaled.edges()[1].weight - 1000.0).abs() < 1e-9);
        assert_eq!(scaled.edges()[0].weight, 10.0);
    }
}
