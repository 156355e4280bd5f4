//! Line-oriented scenario files.
//!
//! ```text
//! [network]
//! motes = 10
//! topology = ring        # ring | grid | geometric
//!
//! [links]
//! link_quality = 0.9
//! link=0-1 uptime=0.5
//!
//! [events]
//! at=25 link=1-* link_quality=0.2
//! at=30 kill=hacp
//! ```
//!
//! Keys that are not given keep the defaults of [`Scenario::default`].

use std::collections::HashMap;

use adsafe_core::simnet::{
    Architecture, KillTarget, LinkChange, LinkSelector, Scenario, ScenarioEvent, ScoreWeights, SimError, TopologyKind,
    TrustEngine,
};
use adsafe_core::trust_qad::OperatorChoice;
use adsafe_core::Address;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing [network] section")]
    MissingNetwork,
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        key: String,
        message: String,
    },
}

impl ScenarioFileError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ScenarioFileError::Syntax { line, .. } => Some(*line),
            ScenarioFileError::MissingNetwork => None,
            ScenarioFileError::Invalid { line, .. } => *line,
        }
    }
}

/// A parsed scenario plus the line each setting came from.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    key_lines: HashMap<String, usize>,
    section_lines: HashMap<String, usize>,
    override_lines: Vec<usize>,
    event_lines: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Network,
    Rwp,
    Trust,
    Energy,
    Links,
    Events,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "network" => Section::Network,
            "rwp" => Section::Rwp,
            "trust" => Section::Trust,
            "energy" => Section::Energy,
            "links" => Section::Links,
            "events" => Section::Events,
            _ => return None,
        })
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Syntax {
        line,
        message: message.into(),
    }
}

/// Splits `a=1 b = 2` into `[("a", "1"), ("b", "2")]`.
fn pairs(text: &str, line: usize) -> Result<Vec<(String, String)>, ScenarioFileError> {
    let mut compact = String::with_capacity(text.len());
    let mut chars = text.trim().chars().peekable();
    while let Some(ch) = chars.next() {
        if ch.is_whitespace() {
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
            if chars.peek() == Some(&'=') || compact.ends_with('=') {
                continue;
            }
            compact.push(' ');
        } else {
            compact.push(ch);
            if ch == '=' {
                while chars.peek().is_some_and(|c| c.is_whitespace()) {
                    chars.next();
                }
            }
        }
    }
    compact
        .split(' ')
        .map(|token| match token.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
            _ => Err(syntax(line, format!("expected key=value, found `{token}`"))),
        })
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ScenarioFileError> {
    value
        .parse()
        .map_err(|_| syntax(line, format!("{key}: cannot parse `{value}`")))
}

fn boolean(key: &str, value: &str, line: usize) -> Result<bool, ScenarioFileError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(syntax(line, format!("{key}: expected true or false, found `{value}`"))),
    }
}

fn address(value: &str, line: usize) -> Result<Address, ScenarioFileError> {
    number::<u32>("address", value, line).map(Address)
}

fn selector(value: &str, line: usize) -> Result<LinkSelector, ScenarioFileError> {
    let (a, b) = value
        .split_once('-')
        .ok_or_else(|| syntax(line, format!("link: expected a-b or a-*, found `{value}`")))?;
    let a = address(a, line)?;
    if b == "*" {
        Ok(LinkSelector::AllOf(a))
    } else {
        Ok(LinkSelector::Pair(a, address(b, line)?))
    }
}

fn link_field(change: &mut LinkChange, key: &str, value: &str, line: usize) -> Result<(), ScenarioFileError> {
    let v = number::<f64>(key, value, line)?;
    match key {
        "link_quality" => change.link_quality = Some(v),
        "tx_rate_bps" => change.tx_rate_bps = Some(v),
        "response_time_ms" => change.response_time_ms = Some(v),
        "uptime" => change.uptime = Some(v),
        _ => return Err(syntax(line, format!("unknown link parameter `{key}`"))),
    }
    Ok(())
}

fn link_line(fields: &[(String, String)], line: usize) -> Result<(LinkSelector, LinkChange), ScenarioFileError> {
    let (_, target) = fields
        .iter()
        .find(|(k, _)| k == "link")
        .ok_or_else(|| syntax(line, "missing link="))?;
    let sel = selector(target, line)?;
    let mut change = LinkChange::default();
    for (k, v) in fields.iter().filter(|(k, _)| k != "link") {
        link_field(&mut change, k, v, line)?;
    }
    Ok((sel, change))
}

fn event_line(fields: &[(String, String)], line: usize) -> Result<ScenarioEvent, ScenarioFileError> {
    let at = match fields.first() {
        Some((k, v)) if k == "at" => number::<u64>("at", v, line)?,
        _ => return Err(syntax(line, "event must start with at=<interval>")),
    };
    let rest = &fields[1..];
    match rest.first().map(|(k, _)| k.as_str()) {
        Some("kill") => {
            if rest.len() != 1 {
                return Err(syntax(line, "kill takes no further parameters"));
            }
            let target = match rest[0].1.as_str() {
                "hacp" => KillTarget::Hacp,
                other => KillTarget::Mote(address(other, line)?),
            };
            Ok(ScenarioEvent::Kill { at, target })
        }
        Some("link") => {
            let (selector, change) = link_line(rest, line)?;
            Ok(ScenarioEvent::Link { at, selector, change })
        }
        _ => Err(syntax(line, "event needs link= or kill=")),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        let mut file = ScenarioFile {
            scenario: Scenario::default(),
            key_lines: HashMap::new(),
            section_lines: HashMap::new(),
            override_lines: Vec::new(),
            event_lines: Vec::new(),
        };
        let mut section = None;
        let mut radius = None;
        let mut geometric_line = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?
                    .trim();
                let parsed = Section::parse(name).ok_or_else(|| syntax(line, format!("unknown section [{name}]")))?;
                if file.section_lines.insert(name.to_string(), line).is_some() {
                    return Err(syntax(line, format!("duplicate section [{name}]")));
                }
                section = Some(parsed);
                continue;
            }
            let Some(current) = section else {
                return Err(syntax(line, "setting outside of a section"));
            };
            let fields = match content.split_once('=') {
                Some((k, v)) if !v.contains('=') && !k.trim().is_empty() && !v.trim().is_empty() => {
                    vec![(k.trim().to_string(), v.trim().to_string())]
                }
                _ => pairs(content, line)?,
            };

            match current {
                Section::Events => {
                    file.scenario.events.push(event_line(&fields, line)?);
                    file.event_lines.push(line);
                    continue;
                }
                Section::Links if fields[0].0 == "link" => {
                    file.scenario.link_overrides.push(link_line(&fields, line)?);
                    file.override_lines.push(line);
                    continue;
                }
                _ => {}
            }
            let [(key, value)] = fields.as_slice() else {
                return Err(syntax(line, "expected a single key = value"));
            };
            if file.key_lines.insert(key.clone(), line).is_some() {
                return Err(syntax(line, format!("duplicate key `{key}`")));
            }
            let s = &mut file.scenario;
            let (key, value) = (key.as_str(), value.as_str());
            match (current, key) {
                (Section::Network, "motes") => s.motes = number(key, value, line)?,
                (Section::Network, "topology") => {
                    s.topology = match value {
                        "ring" => TopologyKind::Ring,
                        "grid" => TopologyKind::Grid,
                        "geometric" => {
                            geometric_line = Some(line);
                            TopologyKind::RandomGeometric { radius: 0.0 }
                        }
                        _ => return Err(syntax(line, format!("topology: expected ring, grid or geometric, found `{value}`"))),
                    }
                }
                (Section::Network, "radius") => radius = Some(number::<f64>(key, value, line)?),
                (Section::Network, "seed") => s.seed = number(key, value, line)?,
                (Section::Network, "intervals") => s.intervals = number(key, value, line)?,
                (Section::Rwp, "theta_base_s") => s.theta_base_s = number(key, value, line)?,
                (Section::Rwp, "theta_min_s") => s.theta_min_s = number(key, value, line)?,
                (Section::Rwp, "theta_max_s") => s.theta_max_s = number(key, value, line)?,
                (Section::Rwp, "failover") => s.failover = boolean(key, value, line)?,
                (Section::Rwp, "architecture") => {
                    s.architecture = match value {
                        "p2p" => Architecture::PeerToPeer,
                        "sink" => Architecture::Sink,
                        _ => return Err(syntax(line, format!("architecture: expected p2p or sink, found `{value}`"))),
                    }
                }
                (Section::Trust, "engine") => {
                    s.engine = match value {
                        "qad" => TrustEngine::Qad,
                        "beta" => TrustEngine::Beta,
                        "bayes" => TrustEngine::Bayes,
                        _ => return Err(syntax(line, format!("engine: expected qad, beta or bayes, found `{value}`"))),
                    }
                }
                (Section::Trust, "misbehavior_threshold") => s.misbehavior_threshold = number(key, value, line)?,
                (Section::Trust, "weights") => {
                    let parts = value
                        .split(',')
                        .map(|p| number::<f64>(key, p.trim(), line))
                        .collect::<Result<Vec<_>, _>>()?;
                    let weights: [f64; 4] = parts
                        .try_into()
                        .map_err(|_| syntax(line, "weights: expected four comma-separated values"))?;
                    s.weights = ScoreWeights::new(weights);
                }
                (Section::Trust, "qad_operator") => {
                    s.qad_operator = match value {
                        "d" => OperatorChoice::ModerateOptimistic,
                        "g" => OperatorChoice::ModeratePessimistic,
                        "k" => OperatorChoice::ConsensusSeeker,
                        "h" => OperatorChoice::AssessmentHopping,
                        _ => return Err(syntax(line, format!("qad_operator: expected d, g, k or h, found `{value}`"))),
                    }
                }
                (Section::Energy, "capacity_j") => s.energy.capacity_j = number(key, value, line)?,
                (Section::Energy, "init_j") => s.energy.initial_j = number(key, value, line)?,
                (Section::Energy, "harvest_j_per_s") => s.energy.harvest_j_per_s = number(key, value, line)?,
                (Section::Energy, "tx_cost_j") => s.energy.tx_cost_j = number(key, value, line)?,
                (Section::Energy, "rx_cost_j") => s.energy.rx_cost_j = number(key, value, line)?,
                (Section::Energy, "compute_cost_j") => s.energy.compute_cost_j = number(key, value, line)?,
                (Section::Links, "link_quality") => s.link_defaults.link_quality = number(key, value, line)?,
                (Section::Links, "tx_rate_bps") => s.link_defaults.tx_rate_bps = number(key, value, line)?,
                (Section::Links, "response_time_ms") => s.link_defaults.response_time_ms = number(key, value, line)?,
                (Section::Links, "uptime") => s.link_defaults.uptime = number(key, value, line)?,
                (Section::Links, "noise") => s.noise = number(key, value, line)?,
                (Section::Links, "ref_tx_rate_bps") => s.normalizers.ref_tx_rate_bps = number(key, value, line)?,
                (Section::Links, "ref_response_time_ms") => {
                    s.normalizers.ref_response_time_ms = number(key, value, line)?
                }
                _ => return Err(syntax(line, format!("unknown key `{key}`"))),
            }
        }

        if !file.section_lines.contains_key("network") {
            return Err(ScenarioFileError::MissingNetwork);
        }
        match (file.scenario.topology, radius) {
            (TopologyKind::RandomGeometric { .. }, Some(r)) => {
                file.scenario.topology = TopologyKind::RandomGeometric { radius: r };
            }
            (TopologyKind::RandomGeometric { .. }, None) => {
                return Err(syntax(geometric_line.unwrap_or(0), "geometric topology needs radius"));
            }
            (_, Some(_)) => return Err(syntax(file.key_lines["radius"], "radius only applies to geometric topology")),
            _ => {}
        }
        Ok(file)
    }

    /// Runs every scenario invariant and attributes failures to a line.
    pub fn validate(&self) -> Result<(), ScenarioFileError> {
        match self.scenario.validate() {
            Ok(_) => Ok(()),
            Err(SimError::InvalidScenario { key, message }) => Err(ScenarioFileError::Invalid {
                line: self.line_of(&key),
                key,
                message,
            }),
            Err(other) => Err(ScenarioFileError::Invalid {
                line: None,
                key: "scenario".to_string(),
                message: other.to_string(),
            }),
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        match key {
            "link" | "at" | "kill" => self.first_failing_entry(),
            "links" => self.section_lines.get("links").copied(),
            "topology" => self.key_lines.get("topology").or(self.key_lines.get("motes")).copied(),
            _ => self.key_lines.get(key).copied(),
        }
    }

    /// Adds overrides, then events, one at a time until validation fails.
    fn first_failing_entry(&self) -> Option<usize> {
        let mut probe = self.scenario.clone();
        probe.link_overrides.clear();
        probe.events.clear();
        for (entry, &line) in self.scenario.link_overrides.iter().zip(&self.override_lines) {
            probe.link_overrides.push(*entry);
            if probe.validate().is_err() {
                return Some(line);
            }
        }
        for (event, &line) in self.scenario.events.iter().zip(&self.event_lines) {
            probe.events.push(*event);
            if probe.validate().is_err() {
                return Some(line);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# demo
[network]
motes = 12
topology = grid
seed = 7
intervals = 40

[rwp]
theta_base_s = 30
failover = true
architecture = sink

[trust]
engine = beta
weights = 0.7, 0.1, 0.1, 0.1
qad_operator = d

[energy]
harvest_j_per_s = 0.01

[links]
noise = 0
link = 0-1 uptime = 0.5

[events]
at=25 link=1-* link_quality=0.2
at = 30 kill = hacp
";

    #[test]
    fn parses_every_section() {
        let f = ScenarioFile::parse(FULL).unwrap();
        let s = &f.scenario;
        assert_eq!(s.motes, 12);
        assert_eq!(s.topology, TopologyKind::Grid);
        assert_eq!((s.seed, s.intervals), (7, 40));
        assert_eq!(s.theta_base_s, 30.0);
        assert!(s.failover);
        assert_eq!(s.architecture, Architecture::Sink);
        assert_eq!(s.engine, TrustEngine::Beta);
        assert_eq!(s.weights, ScoreWeights::new([0.7, 0.1, 0.1, 0.1]));
        assert_eq!(s.qad_operator, OperatorChoice::ModerateOptimistic);
        assert_eq!(s.energy.harvest_j_per_s, 0.01);
        assert_eq!(s.noise, 0.0);
        assert_eq!(s.link_overrides.len(), 1);
        assert_eq!(
            s.events,
            vec![
                ScenarioEvent::Link {
                    at: 25,
                    selector: LinkSelector::AllOf(Address(1)),
                    change: LinkChange {
                        link_quality: Some(0.2),
                        ..LinkChange::default()
                    }
                },
                ScenarioEvent::Kill {
                    at: 30,
                    target: KillTarget::Hacp
                }
            ]
        );
        f.validate().unwrap();
    }

    #[test]
    fn missing_keys_keep_defaults() {
        let f = ScenarioFile::parse("[network]\n").unwrap();
        assert_eq!(f.scenario, Scenario::default());
    }

    #[test]
    fn unknown_key_names_line() {
        let err = ScenarioFile::parse("[network]\nmotes = 3\nspeed = 9\n").unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("speed"));
    }

    #[test]
    fn key_in_wrong_section_is_unknown() {
        let err = ScenarioFile::parse("[network]\nengine = qad\n").unwrap_err();
        assert_eq!(err.line(), Some(2));
    }

    #[test]
    fn missing_network_section() {
        assert_eq!(
            ScenarioFile::parse("[trust]\nengine = qad\n").unwrap_err(),
            ScenarioFileError::MissingNetwork
        );
    }

    #[test]
    fn invariant_errors_carry_line_and_key() {
        let f = ScenarioFile::parse("[network]\n\nmotes = 0\n").unwrap();
        let err = f.validate().unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("motes"), "{err}");

        let f = ScenarioFile::parse("[network]\n[trust]\nweights = 0.3,0.3,0.2,0.1\n").unwrap();
        let err = f.validate().unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("weights"));
    }

    #[test]
    fn bad_event_is_attributed_to_its_line() {
        let text = "[network]\nmotes = 4\nintervals = 10\n[events]\nat=2 kill=1\nat=3 link=0-2 uptime=0.1\n";
        let err = ScenarioFile::parse(text).unwrap().validate().unwrap_err();
        assert_eq!(err.line(), Some(6));
    }

    #[test]
    fn syntax_errors() {
        for (text, line) in [
            ("motes = 3\n", 1),
            ("[network\n", 1),
            ("[nope]\n", 1),
            ("[network]\nmotes = three\n", 2),
            ("[network]\nmotes = 3\nmotes = 4\n", 3),
            ("[network]\ntopology = geometric\n", 2),
            ("[network]\nradius = 0.3\n", 2),
            ("[network]\n[events]\nlink=0-1 uptime=1\n", 3),
            ("[network]\n[events]\nat=1 kill=1 uptime=1\n", 3),
            ("[network]\n[events]\nat=1 link=0-1 speed=1\n", 3),
            ("[network]\n[trust]\nweights = 1,0\n", 3),
        ] {
            assert_eq!(ScenarioFile::parse(text).unwrap_err().line(), Some(line), "{text:?}");
        }
    }

    #[test]
    fn geometric_with_radius() {
        let f = ScenarioFile::parse("[network]\ntopology = geometric\nradius = 0.5\n").unwrap();
        assert_eq!(f.scenario.topology, TopologyKind::RandomGeometric { radius: 0.5 });
    }
}
