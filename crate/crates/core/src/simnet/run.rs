//! The interval loop: monitor, announce, elect, serve, adapt.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rwp::{
    aggregate_major, compute_pcp, elect_with_backup, failover, handle_query, next_interval, Address, FloodMessage,
    MinorUpload, MsgId,
};
use crate::trust_qad::{rate_of_change, Assessment, AssessmentMatrix};
use crate::trustworthiness::TrustworthinessParams;

use super::mote::{Action, AnalysisConfig, MoteState};
use super::observe::{observe_link, LinkTruth, NoiseAmplitude};
use super::scenario::{Architecture, KillTarget, LinkSelector, Scenario, ScenarioEvent};
use super::topology::Topology;
use super::trace::{IntervalRecord, MessageStats, MoteRecord, PairRecord, SimulationTrace};
use super::{SimError, STREAM_DYNAMICS, STREAM_NOISE, STREAM_TRAFFIC};

/// Runs the scenario to completion. The trace depends only on the scenario
/// (its seed included).
pub fn run(scenario: &Scenario) -> Result<SimulationTrace, SimError> {
    let topology = scenario.validate()?;
    let mut sim = Simulation::new(scenario, topology)?;
    let intervals = (0..scenario.intervals)
        .map(|index| sim.step(index))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationTrace {
        engine: scenario.engine,
        intervals,
    })
}

fn link_key(a: Address, b: Address) -> (Address, Address) {
    (a.min(b), a.max(b))
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Simulation<'a> {
    scenario: &'a Scenario,
    topology: Topology,
    motes: Vec<MoteState>,
    links: BTreeMap<(Address, Address), LinkTruth>,
    cfg: AnalysisConfig,
    theta: f64,
    noise_rng: ChaCha8Rng,
    dynamics_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
}

impl<'a> Simulation<'a> {
    fn new(scenario: &'a Scenario, topology: Topology) -> Result<Self, SimError> {
        let n = scenario.motes;
        let mut motes = Vec::with_capacity(n);
        for i in 0..n {
            let addr = Address(i as u32);
            let neighbors: Vec<Address> = topology.neighbors(addr).collect();
            let mote = MoteState::new(
                addr,
                &neighbors,
                &scenario.energy,
                scenario.theta_base_s,
                scenario.engine,
                scenario.qad_operator,
            )?;
            motes.push(if scenario.architecture == Architecture::Sink && i == 0 {
                mote.into_sink()
            } else {
                mote
            });
        }

        let noise = NoiseAmplitude::relative(scenario.noise, &scenario.normalizers);
        let mut links: BTreeMap<_, _> = topology
            .edges()
            .into_iter()
            .map(|e| (e, LinkTruth::new(scenario.link_defaults, noise)))
            .collect();
        let selected = |links: &BTreeMap<(Address, Address), LinkTruth>, sel: &LinkSelector| -> Vec<(Address, Address)> {
            match *sel {
                LinkSelector::Pair(a, b) => vec![link_key(a, b)],
                LinkSelector::AllOf(a) => links.keys().copied().filter(|&(x, y)| x == a || y == a).collect(),
            }
        };
        for (sel, change) in &scenario.link_overrides {
            for key in selected(&links, sel) {
                if let Some(truth) = links.get_mut(&key) {
                    change.apply(&mut truth.params);
                }
            }
        }
        for event in &scenario.events {
            if let ScenarioEvent::Link { at, selector, change } = event {
                for key in selected(&links, selector) {
                    if let Some(truth) = links.get_mut(&key) {
                        truth.schedule(*at, *change);
                    }
                }
            }
        }

        Ok(Self {
            scenario,
            topology,
            motes,
            links,
            cfg: AnalysisConfig {
                weights: scenario.weights,
                normalizers: scenario.normalizers,
                misbehavior_threshold: scenario.misbehavior_threshold,
                params: TrustworthinessParams::default(),
            },
            theta: scenario.theta_base_s,
            noise_rng: seeded(scenario.seed, STREAM_NOISE),
            dynamics_rng: seeded(scenario.seed, STREAM_DYNAMICS),
            traffic_rng: seeded(scenario.seed, STREAM_TRAFFIC),
        })
    }

    fn alive(&self, a: Address) -> bool {
        self.motes[a.0 as usize].is_alive()
    }

    fn charge(&mut self, a: Address, action: Action) -> bool {
        self.motes[a.0 as usize].charge_energy(action, &self.scenario.energy)
    }

    fn live_addresses(&self) -> Vec<Address> {
        self.motes.iter().filter(|m| m.is_alive()).map(|m| m.addr).collect()
    }

    fn live_neighbors(&self, a: Address) -> Vec<Address> {
        self.topology.neighbors(a).filter(|&b| self.alive(b)).collect()
    }

    /// Hop-by-hop unicast along a precomputed path; each hop costs the
    /// sender a transmission and the receiver a reception.
    fn deliver(&mut self, path: &[Address], stats: &mut MessageStats) -> bool {
        for hop in path.windows(2) {
            if !self.charge(hop[0], Action::Tx) {
                return false;
            }
            stats.unicast_tx += 1;
            if !self.charge(hop[1], Action::Rx) {
                return false;
            }
        }
        true
    }

    fn unicast(&mut self, from: Address, to: Address, stats: &mut MessageStats) -> bool {
        let path = {
            let motes = &self.motes;
            self.topology.path(from, to, |a| motes[a.0 as usize].is_alive())
        };
        match path {
            Some(path) => self.deliver(&path, stats),
            None => false,
        }
    }

    /// Duplicate-suppressed broadcast from `origin`. Every live mote that
    /// hears the message for the first time rebroadcasts it once. Returns
    /// the motes that received it, origin included.
    fn flood(&mut self, message: FloodMessage, stats: &mut MessageStats) -> BTreeSet<Address> {
        let cap = self.motes.len() as u32;
        let mut seen = BTreeSet::from([message.origin]);
        let mut queue = VecDeque::from([(message.origin, message)]);
        while let Some((holder, msg)) = queue.pop_front() {
            if msg.hop_count >= cap || !self.alive(holder) || !self.charge(holder, Action::Tx) {
                continue;
            }
            stats.flood_tx += 1;
            for v in self.live_neighbors(holder) {
                if !self.charge(v, Action::Rx) {
                    continue;
                }
                stats.flood_rx += 1;
                if seen.insert(v) {
                    let forwarded = FloodMessage {
                        hop_count: msg.hop_count + 1,
                        ..msg
                    };
                    queue.push_back((v, forwarded));
                }
            }
        }
        seen.retain(|&a| self.alive(a));
        seen
    }

    fn monitor(&mut self, stats: &mut MessageStats) -> Result<(), SimError> {
        let n = self.motes.len();
        for i in 0..n {
            let a = Address(i as u32);
            for b in self.topology.neighbors(a).collect::<Vec<_>>() {
                if !self.alive(a) {
                    break;
                }
                if !self.alive(b) {
                    continue;
                }
                // poll request and response
                if !self.charge(a, Action::Tx) {
                    break;
                }
                stats.unicast_tx += 1;
                if !self.charge(b, Action::Rx) || !self.charge(b, Action::Tx) {
                    continue;
                }
                stats.unicast_tx += 1;
                if !self.charge(a, Action::Rx) {
                    break;
                }
                let obs = observe_link(&self.links[&link_key(a, b)], &mut self.noise_rng);
                if !self.charge(a, Action::Compute) {
                    break;
                }
                self.motes[i].analyze(b, &obs, &self.cfg)?;
            }
        }

        // poll responses also carry the responder's own assessments
        let rows: Vec<BTreeMap<Address, Assessment>> =
            self.motes.iter().map(|m| m.rwp.a_minor().owner_row().collect()).collect();
        for i in 0..n {
            let a = Address(i as u32);
            if !self.alive(a) {
                continue;
            }
            let members = self.motes[i].rwp.a_minor().members().to_vec();
            for b in self.live_neighbors(a) {
                for &m in &members {
                    let value = rows[b.0 as usize].get(&m).copied().unwrap_or(Assessment::Undefined);
                    self.motes[i].rwp.a_minor_mut().set(b, m, value)?;
                }
            }
        }
        Ok(())
    }

    fn step(&mut self, index: u64) -> Result<IntervalRecord, SimError> {
        let n = self.motes.len();
        let alive_at_start: Vec<bool> = self.motes.iter().map(MoteState::is_alive).collect();
        for truth in self.links.values_mut() {
            truth.advance_to(index);
        }
        let mut stats = MessageStats::default();

        // monitor
        let before: Vec<AssessmentMatrix> = self.motes.iter().map(|m| m.rwp.a_minor().matrix().clone()).collect();
        self.monitor(&mut stats)?;
        let mut pcp = vec![None; n];
        let mut roc = vec![None; n];
        for (i, mote) in self.motes.iter_mut().enumerate() {
            if !mote.is_alive() {
                continue;
            }
            let r = rate_of_change(&before[i], mote.rwp.a_minor().matrix())?;
            let p = compute_pcp(mote.energy(), mote.harvest_rate(), self.theta, mote.capacity())?;
            mote.rwp.announce(p, r)?;
            pcp[i] = Some(p);
            roc[i] = Some(r);
        }

        // announce and elect
        let mut announcements = Vec::new();
        let (elected, backup) = match self.scenario.architecture {
            Architecture::PeerToPeer => {
                let mut heard: Vec<BTreeMap<Address, u8>> = vec![BTreeMap::new(); n];
                for (i, p) in pcp.iter().enumerate() {
                    let Some(p) = *p else { continue };
                    let origin = Address(i as u32);
                    if !self.alive(origin) {
                        continue;
                    }
                    let msg = FloodMessage {
                        origin,
                        pcp: p,
                        msg_id: MsgId { origin, interval: index },
                        hop_count: 0,
                    };
                    for r in self.flood(msg, &mut stats) {
                        heard[r.0 as usize].insert(origin, p);
                    }
                }
                match self.live_addresses().first() {
                    Some(reference) => {
                        announcements = heard[reference.0 as usize].iter().map(|(&a, &p)| (a, p)).collect();
                        let (primary, runner_up) = elect_with_backup(&announcements)?;
                        (Some(primary), runner_up.filter(|_| self.scenario.failover))
                    }
                    None => (None, None),
                }
            }
            Architecture::Sink => (Some(Address(0)), None),
        };
        for mote in self.motes.iter_mut().filter(|m| m.is_alive()) {
            mote.rwp.start_election()?;
        }

        // scripted failures strike between the election and serving
        for event in &self.scenario.events {
            if let ScenarioEvent::Kill { at, target } = *event {
                if at != index {
                    continue;
                }
                let victim = match target {
                    KillTarget::Mote(a) => Some(a),
                    KillTarget::Hacp => elected,
                };
                if let Some(v) = victim {
                    self.motes[v.0 as usize].kill();
                }
            }
        }

        // serve
        if let Some(hacp) = elected {
            for mote in self.motes.iter_mut().filter(|m| m.is_alive()) {
                mote.rwp.serve(hacp, backup)?;
            }
        }
        let active = elected.and_then(|h| {
            let motes = &self.motes;
            failover(h, backup, |a| motes[a.0 as usize].is_alive())
        });
        let mut served = BTreeSet::new();
        let mut theta_next = self.theta;
        if let Some(server) = active {
            if let Some((next, members)) = self.serve(server, index, &mut stats)? {
                theta_next = next;
                served = members;
            }
        }
        let active = active.filter(|_| !served.is_empty());
        for mote in self.motes.iter_mut() {
            if !served.contains(&mote.addr) {
                mote.served_view = None;
            }
        }

        // adapt: preferred peers and application traffic
        let mut selected = vec![None; n];
        for (i, slot) in selected.iter_mut().enumerate() {
            let a = Address(i as u32);
            if !self.alive(a) {
                continue;
            }
            let candidates = self.live_neighbors(a);
            if !candidates.is_empty() {
                *slot = Some(self.motes[i].select_peer(&candidates, &self.cfg)?);
            }
        }
        self.route_traffic(&mut stats)?;

        for mote in self.motes.iter_mut().filter(|m| m.is_alive()) {
            mote.harvest(self.theta);
        }
        for mote in self.motes.iter_mut().filter(|m| m.is_alive()) {
            if mote.rwp.phase() == crate::rwp::RwpPhase::Serving {
                mote.rwp.finish_interval(theta_next)?;
            }
        }

        let motes = self
            .motes
            .iter()
            .enumerate()
            .map(|(i, m)| MoteRecord {
                addr: m.addr,
                alive: m.is_alive(),
                energy_j: m.energy(),
                pcp: pcp[i],
                roc: roc[i],
                is_hacp: active == Some(m.addr),
                selected_peer: selected[i],
                served: served.contains(&m.addr),
            })
            .collect();
        let mut pairs = Vec::new();
        for m in self.motes.iter().filter(|m| m.is_alive()) {
            for &peer in &m.observed {
                if let Some(pm) = m.pair_metrics(peer, &self.cfg) {
                    pairs.push(PairRecord {
                        src: m.addr,
                        dst: peer,
                        engine_metric: pm.engine_metric,
                        record: pm.record,
                    });
                }
            }
        }
        let deaths = self
            .motes
            .iter()
            .zip(&alive_at_start)
            .filter(|(m, &was)| was && !m.is_alive())
            .map(|(m, _)| m.addr)
            .collect();

        let record = IntervalRecord {
            index,
            theta_s: self.theta,
            theta_next_s: theta_next,
            announcements,
            elected_hacp: elected,
            backup_hacp: backup,
            active_hacp: active,
            motes,
            pairs,
            messages: stats,
            deaths,
        };
        self.theta = theta_next;
        Ok(record)
    }

    /// HACP duty: collect neighborhood matrices, build the society matrix,
    /// broadcast it with the next interval length and answer queries.
    /// Returns `None` if the server died before it could broadcast.
    fn serve(
        &mut self,
        server: Address,
        index: u64,
        stats: &mut MessageStats,
    ) -> Result<Option<(f64, BTreeSet<Address>)>, SimError> {
        let mut uploads = Vec::new();
        let mut rocs = Vec::new();
        for a in self.live_addresses() {
            if a != server && !self.unicast(a, server, stats) {
                continue;
            }
            let mote = &self.motes[a.0 as usize];
            uploads.push(MinorUpload {
                owner: a,
                minor: mote.rwp.a_minor().clone(),
                operator: mote.operator,
            });
            rocs.push(mote.rwp.roc());
            stats.uploads_delivered += 1;
        }
        for _ in 0..uploads.len() {
            if !self.charge(server, Action::Compute) {
                return Ok(None);
            }
        }
        if !self.alive(server) {
            return Ok(None);
        }

        let theta_next = next_interval(&rocs, self.scenario.theta_base_s, self.scenario.theta_bounds())?;
        let society: Vec<Address> = (0..self.motes.len() as u32).map(Address).collect();
        let major = aggregate_major(&uploads, &society, index, theta_next, &mut self.dynamics_rng)?;

        let broadcast = FloodMessage {
            origin: server,
            pcp: self.motes[server.0 as usize].rwp.pcp(),
            msg_id: MsgId {
                origin: server,
                interval: index,
            },
            hop_count: 0,
        };
        let served = self.flood(broadcast, stats);
        for &a in &served {
            let row: BTreeMap<Address, Assessment> = society
                .iter()
                .map(|&j| (j, major.get(a, j).unwrap_or(Assessment::Undefined)))
                .collect();
            self.motes[a.0 as usize].served_view = Some(row);
        }

        // one batched query per mote per interval; replies are cached
        for &a in &served {
            if a == server {
                continue;
            }
            if self.unicast(a, server, stats) && self.unicast(server, a, stats) {
                for peer in self.topology.neighbors(a).collect::<Vec<_>>() {
                    handle_query(&major, peer)?;
                }
                stats.queries_answered += 1;
            }
        }
        Ok(Some((theta_next, served)))
    }

    /// Each live mote sends one message to a random live destination,
    /// forwarded greedily to the most trusted neighbor that is closer.
    fn route_traffic(&mut self, stats: &mut MessageStats) -> Result<(), SimError> {
        let hop_cap = self.motes.len();
        for src in self.live_addresses() {
            if !self.alive(src) {
                continue;
            }
            let others: Vec<Address> = self.live_addresses().into_iter().filter(|&a| a != src).collect();
            if others.is_empty() {
                continue;
            }
            let dest = others[self.traffic_rng.gen_range(0..others.len())];
            stats.app_sent += 1;
            let dist = {
                let motes = &self.motes;
                self.topology.distances(dest, |a| motes[a.0 as usize].is_alive())
            };
            let mut holder = src;
            let mut hops = 0;
            while holder != dest && hops < hop_cap {
                let Some(here) = dist[holder.0 as usize] else { break };
                let closer: Vec<Address> = self
                    .live_neighbors(holder)
                    .into_iter()
                    .filter(|v| dist[v.0 as usize].is_some_and(|d| d < here))
                    .collect();
                if closer.is_empty() {
                    break;
                }
                let next = self.motes[holder.0 as usize].select_peer(&closer, &self.cfg)?;
                if !self.charge(holder, Action::Tx) || !self.charge(next, Action::Rx) {
                    break;
                }
                hops += 1;
                holder = next;
            }
            if holder == dest {
                stats.app_delivered += 1;
                stats.app_hops += hops as u64;
            }
        }
        Ok(())
    }
}
