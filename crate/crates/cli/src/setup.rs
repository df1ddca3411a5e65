//! Turns a config into a solvable problem: instance, reference optimum,
//! dual sets and network.

use std::fs;

use cobadd::consensus::{metropolis_weights, random_connected_graph, ConsensusMatrix, Graph};
use cobadd::oracles::{OracleCache, OracleResult};
use cobadd::problem::{
    build_dual_sets, make_coupled_lmi_instance, make_sample_lmi_instance, make_sample_num_instance, min_admissible_r,
    DualPoint, DualSetSpec, ProblemInstance, SlaterCertificate,
};

use crate::config::{BuiltinInstance, ExperimentConfig, GraphConfig, InstanceSource};
use crate::CliError;

pub const ORACLE_CACHE_FILE: &str = "oracle_cache.json";

pub struct Setup {
    pub instance: ProblemInstance,
    pub oracle: OracleResult,
    pub slater: SlaterCertificate,
    pub sets: DualSetSpec,
    pub network: Option<Network>,
}

pub struct Network {
    pub config: GraphConfig,
    pub graph: Graph,
    pub w: ConsensusMatrix,
}

pub fn load_instance(source: &InstanceSource) -> Result<ProblemInstance, CliError> {
    match source {
        InstanceSource::Builtin { builtin, n, seed } => Ok(match builtin {
            BuiltinInstance::Num => make_sample_num_instance(n.unwrap_or(100), seed.unwrap_or(42)),
            BuiltinInstance::Lmi => make_sample_lmi_instance(),
            BuiltinInstance::LmiCoupled => make_coupled_lmi_instance(),
        }),
        InstanceSource::Path { path } => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("instance.path: {e}")))?;
            ProblemInstance::from_json(&text).map_err(|e| CliError::Config(format!("instance.path: {e}")))
        }
    }
}

/// Box lower ends, then box midpoints, unless the config names a point.
pub fn slater_point(instance: &ProblemInstance, given: Option<&[f64]>) -> Result<SlaterCertificate, CliError> {
    if let Some(x) = given {
        return Ok(SlaterCertificate::new(instance, x.to_vec())?);
    }
    let lows: Vec<f64> = instance.nodes().iter().map(|n| n.lo()).collect();
    let mids: Vec<f64> = instance.nodes().iter().map(|n| 0.5 * (n.lo() + n.hi())).collect();
    SlaterCertificate::new(instance, lows)
        .or_else(|_| SlaterCertificate::new(instance, mids))
        .map_err(|e| CliError::Config(format!("slater: no strictly feasible default point ({e}); set one explicitly")))
}

/// Dual sets from the zero probe; `r` defaults to the smallest admissible
/// value, or 1 when that is zero.
pub fn dual_sets(
    instance: &ProblemInstance,
    slater: &SlaterCertificate,
    r: Option<f64>,
) -> Result<DualSetSpec, CliError> {
    let probe = DualPoint::zero(instance.d());
    let r = match r {
        Some(r) => r,
        None => {
            let min_r = min_admissible_r(instance, slater, &probe)?;
            if min_r > 0.0 {
                min_r
            } else {
                1.0
            }
        }
    };
    Ok(build_dual_sets(instance, slater, &probe, r)?)
}

pub fn network(config: &GraphConfig, n: usize) -> Result<Network, CliError> {
    if let Some(gn) = config.n {
        if gn != n {
            return Err(CliError::Config(format!(
                "graph.n: {gn} does not match the instance size {n}"
            )));
        }
    }
    let graph = random_connected_graph(n, config.avg_degree, config.seed)?;
    let w = metropolis_weights(&graph)?;
    Ok(Network {
        config: config.clone(),
        graph,
        w,
    })
}

pub fn prepare(config: &ExperimentConfig) -> Result<Setup, CliError> {
    let instance = load_instance(&config.instance)?;
    let mut cache = OracleCache::open(config.output_dir.join(ORACLE_CACHE_FILE))?;
    let oracle = cache.reference_optimum(&instance).map_err(CliError::Oracle)?;
    let slater = slater_point(&instance, config.slater.as_deref())?;
    let sets = dual_sets(&instance, &slater, config.r)?;
    let network = config
        .graph
        .as_ref()
        .map(|g| network(g, instance.n()))
        .transpose()?;
    Ok(Setup {
        instance,
        oracle,
        slater,
        sets,
        network,
    })
}
