//! JSON instance files: an independence system plus one weight distribution per agent.
//!
//! Numbers (probabilities and weights) may be JSON numbers or strings holding
//! an integer, a decimal or a fraction `"p/q"`; all are read exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroids::{AnyMatroid, GraphicMatroid, Matchoid, MatchoidComponent, PartitionMatroid, TransversalMatroid};
use crate::model::{Hypergraph, HypergraphLike, IndependenceSystem, WeightDistribution, WeightFunction};
use crate::scalar::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<Rational> {
        let parsed = match self {
            Number::Int(n) => Some(Rational::from_integer((*n).into())),
            // the shortest decimal that round-trips is what the file said
            Number::Float(x) => parse_rational(&format!("{x}")),
            Number::Text(s) => parse_rational(s),
        };
        parsed.ok_or_else(|| Error::InvalidInput(format!("cannot read {self:?} as a rational number")))
    }

    pub fn from_rational(r: &Rational) -> Self {
        if r.is_integer() {
            if let Ok(n) = i64::try_from(r.to_integer()) {
                return Number::Int(n);
            }
        }
        Number::Text(r.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidSpec {
    Partition { parts: Vec<Vec<usize>> },
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
    Transversal { left: usize, right: usize, adjacency: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub active: Vec<usize>,
    pub matroid: MatroidSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Hypergraph { nodes: usize, edges: Vec<Vec<usize>> },
    Matroid { matroid: MatroidSpec },
    Matchoid { ground_size: usize, components: Vec<ComponentSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub element: usize,
    pub w: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub p: Number,
    pub weights: Vec<WeightSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub system: SystemSpec,
    /// Number of agents; defaults to the number of distributions. With a single
    /// distribution and a larger count, every agent shares it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    pub distributions: Vec<Vec<AtomSpec>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum System {
    Hypergraph(Hypergraph),
    Matroid(AnyMatroid),
    Matchoid(Matchoid),
}

impl System {
    pub fn kind(&self) -> &'static str {
        match self {
            System::Hypergraph(_) => "hypergraph",
            System::Matroid(_) => "matroid",
            System::Matchoid(_) => "matchoid",
        }
    }

    pub fn ground_size(&self) -> usize {
        match self {
            System::Hypergraph(h) => h.ground_size(),
            System::Matroid(m) => m.ground_size(),
            System::Matchoid(m) => m.ground_size(),
        }
    }

    pub fn to_spec(&self) -> SystemSpec {
        match self {
            System::Hypergraph(h) => SystemSpec::Hypergraph { nodes: h.num_nodes(), edges: h.edges().to_vec() },
            System::Matroid(m) => SystemSpec::Matroid { matroid: matroid_spec(m) },
            System::Matchoid(mc) => SystemSpec::Matchoid {
                ground_size: mc.ground_size(),
                components: mc
                    .components()
                    .iter()
                    .map(|c| ComponentSpec { active: c.active().to_vec(), matroid: matroid_spec(c.matroid()) })
                    .collect(),
            },
        }
    }
}

fn matroid_spec(m: &AnyMatroid) -> MatroidSpec {
    match m {
        AnyMatroid::Partition(p) => MatroidSpec::Partition { parts: p.parts().to_vec() },
        AnyMatroid::Graphic(g) => MatroidSpec::Graphic { vertices: g.num_vertices(), edges: g.edges().to_vec() },
        AnyMatroid::Transversal(t) => MatroidSpec::Transversal {
            left: t.num_left(),
            right: t.num_right(),
            adjacency: (0..t.num_left()).map(|l| t.neighbors(l).to_vec()).collect(),
        },
    }
}

fn build_matroid(spec: &MatroidSpec) -> Result<AnyMatroid> {
    Ok(match spec {
        MatroidSpec::Partition { parts } => PartitionMatroid::new(parts.clone())?.into(),
        MatroidSpec::Graphic { vertices, edges } => GraphicMatroid::new(*vertices, edges.clone())?.into(),
        MatroidSpec::Transversal { left, right, adjacency } => {
            if adjacency.len() != *left {
                return Err(Error::InvalidInstance(format!(
                    "transversal matroid declares {left} left vertices but lists {} adjacency rows",
                    adjacency.len()
                )));
            }
            TransversalMatroid::new(*right, adjacency.clone())?.into()
        }
    })
}

impl SystemSpec {
    pub fn build(&self) -> Result<System> {
        Ok(match self {
            SystemSpec::Hypergraph { nodes, edges } => System::Hypergraph(Hypergraph::new(*nodes, edges.clone())?),
            SystemSpec::Matroid { matroid } => System::Matroid(build_matroid(matroid)?),
            SystemSpec::Matchoid { ground_size, components } => {
                let comps = components
                    .iter()
                    .map(|c| MatchoidComponent::new(c.active.clone(), build_matroid(&c.matroid)?))
                    .collect::<Result<Vec<_>>>()?;
                System::Matchoid(Matchoid::new(*ground_size, comps)?)
            }
        })
    }
}

/// Validated instance with exact distributions.
#[derive(Clone, Debug)]
pub struct Instance {
    pub system: System,
    pub distributions: Vec<WeightDistribution<Rational>>,
    pub agents: usize,
}

impl Instance {
    pub fn new(system: System, distributions: Vec<WeightDistribution<Rational>>, agents: Option<usize>) -> Result<Self> {
        if distributions.is_empty() {
            return Err(Error::InvalidInstance("no agent distributions".into()));
        }
        let n = system.ground_size();
        for (a, d) in distributions.iter().enumerate() {
            if let Some(e) = d.max_element().filter(|&e| e >= n) {
                return Err(Error::InvalidInstance(format!(
                    "agent {a} weighs element {e} outside ground set of size {n}"
                )));
            }
        }
        let agents = agents.unwrap_or(distributions.len());
        if agents == 0 {
            return Err(Error::InvalidInstance("agent count must be positive".into()));
        }
        if distributions.len() != 1 && distributions.len() != agents {
            return Err(Error::InvalidInstance(format!(
                "{agents} agents need either one shared distribution or {agents} distributions, got {}",
                distributions.len()
            )));
        }
        Ok(Self { system, distributions, agents })
    }

    pub fn from_file_spec(file: &InstanceFile) -> Result<Self> {
        let system = file.system.build()?;
        let distributions = file
            .distributions
            .iter()
            .enumerate()
            .map(|(a, atoms)| {
                let atoms = atoms
                    .iter()
                    .map(|atom| {
                        let weights = atom
                            .weights
                            .iter()
                            .map(|w| Ok((w.element, w.w.to_rational()?)))
                            .collect::<Result<Vec<_>>>()?;
                        Ok((atom.p.to_rational()?, WeightFunction::new(weights)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                WeightDistribution::new(atoms)
                    .map_err(|e| Error::InvalidDistribution(format!("agent {a}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(system, distributions, file.agents)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_spec(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_spec(&self) -> InstanceFile {
        InstanceFile {
            system: self.system.to_spec(),
            agents: (self.agents != self.distributions.len()).then_some(self.agents),
            distributions: self
                .distributions
                .iter()
                .map(|d| {
                    d.atoms()
                        .iter()
                        .map(|(p, w)| AtomSpec {
                            p: Number::from_rational(p),
                            weights: w
                                .entries()
                                .iter()
                                .map(|(e, v)| WeightSpec { element: *e, w: Number::from_rational(v) })
                                .collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Distribution of agent `a`.
    pub fn distribution(&self, a: usize) -> &WeightDistribution<Rational> {
        &self.distributions[if self.distributions.len() == 1 { 0 } else { a }]
    }

    /// One distribution per agent, sharing the single one when needed.
    pub fn per_agent(&self) -> Vec<WeightDistribution<Rational>> {
        (0..self.agents).map(|a| self.distribution(a).clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_spec())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{
        "system": {"type": "hypergraph", "nodes": 5, "edges": [[1,2],[2,3],[3,4]]},
        "distributions": [
            [{"p": 1, "weights": [{"element": 0, "w": 2}, {"element": 2, "w": 1}]}],
            [{"p": "1/2", "weights": [{"element": 1, "w": 3}]}, {"p": 0.5, "weights": []}]
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let inst = Instance::from_json(FIXTURE).unwrap();
        assert_eq!(inst.agents, 2);
        assert_eq!(inst.system.kind(), "hypergraph");
        let again = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(again.system, inst.system);
        assert_eq!(again.distributions[1].atoms(), inst.distributions[1].atoms());
    }

    #[test]
    fn matroid_and_matchoid_specs() {
        let text = r#"{
            "system": {"type": "matchoid", "ground_size": 3, "components": [
                {"active": [0, 1], "matroid": {"kind": "partition", "parts": [[0, 1]]}},
                {"active": [1, 2], "matroid": {"kind": "transversal", "left": 2, "right": 1, "adjacency": [[0], [0]]}}
            ]},
            "agents": 4,
            "distributions": [[{"p": "1", "weights": [{"element": 2, "w": "0.25"}]}]]
        }"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.agents, 4);
        assert!(inst.to_json().unwrap().contains("\"agents\": 4"));
        let graphic = r#"{"system": {"type": "matroid", "matroid": {"kind": "graphic", "vertices": 3, "edges": [[0,1],[1,2]]}},
            "distributions": [[{"p": 1, "weights": [{"element": 1, "w": 1}]}]]}"#;
        assert_eq!(Instance::from_json(graphic).unwrap().system.ground_size(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_sum = FIXTURE.replace("\"p\": 0.5", "\"p\": 0.25");
        assert!(matches!(Instance::from_json(&bad_sum), Err(Error::InvalidDistribution(_))));
        let bad_elem = FIXTURE.replace("\"element\": 1, \"w\": 3", "\"element\": 9, \"w\": 3");
        assert!(matches!(Instance::from_json(&bad_elem), Err(Error::InvalidInstance(_))));
        assert!(matches!(Instance::from_json("{"), Err(Error::Json(_))));
        let neg = FIXTURE.replace("\"w\": 3", "\"w\": -3");
        assert!(Instance::from_json(&neg).is_err());
    }
}
