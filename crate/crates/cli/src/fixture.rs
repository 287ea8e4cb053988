//! Named state fixtures: `ghz:n`, `tfim:n:h`, `aklt:n`, `expander:d:D:n`,
//! `haar:n[:d]`, `haar:a,b,c`, `product:n[:d]`, `plus:n`, `maxmixed:n[:d]`
//! and `file:path`.

use std::fs::File;
use std::io::BufReader;

use corrlab::states::{
    aklt_mps, expander_state, ghz, haar_chain, plus_state, product_zero, read_chainstate, tfim_groundstate, ChainState,
    MixedChain, PureState, SiteState, Topology,
};
use corrlab::{RngSeed, TensorSpace};

use crate::Failure;

pub enum Fixture {
    Pure(ChainState),
    Mixed(MixedChain),
    /// A pure state on arbitrary factors, not a chain.
    Factors(PureState),
}

impl Fixture {
    pub fn sites(&self) -> Result<&dyn SiteState, Failure> {
        match self {
            Fixture::Pure(s) => Ok(s),
            Fixture::Mixed(m) => Ok(m),
            Fixture::Factors(_) => Err(Failure::Usage("this command needs a chain fixture, not haar:a,b,c".into())),
        }
    }

    pub fn tripartite(&self) -> Result<&PureState, Failure> {
        match self {
            Fixture::Factors(p) if p.space().num_factors() == 3 => Ok(p),
            _ => Err(Failure::Usage("this command needs a tripartite fixture such as haar:4,2,4".into())),
        }
    }
}

fn usage(spec: &str, why: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("bad state '{spec}': {why}"))
}

fn num<T: std::str::FromStr>(spec: &str, field: &str) -> Result<T, Failure> {
    field.parse().map_err(|_| usage(spec, format!("'{field}' is not a number")))
}

pub fn parse(spec: &str, seed: RngSeed, topology: Option<Topology>) -> Result<Fixture, Failure> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| usage(spec, "expected kind:params"))?;
    let fields: Vec<&str> = if kind == "file" { vec![rest] } else { rest.split(':').collect() };
    let arity = |lo: usize, hi: usize| {
        if fields.len() < lo || fields.len() > hi {
            Err(usage(spec, format!("{kind} takes {lo}..={hi} parameters")))
        } else {
            Ok(())
        }
    };
    let build = |e: corrlab::Error| usage(spec, e);
    let chain = match kind {
        "ghz" => {
            arity(1, 1)?;
            ghz(num(spec, fields[0])?).map_err(build)?
        }
        "tfim" => {
            arity(2, 2)?;
            tfim_groundstate(num(spec, fields[0])?, num(spec, fields[1])?).map_err(build)?.state
        }
        "aklt" => {
            arity(1, 1)?;
            let mps = aklt_mps(num(spec, fields[0])?).map_err(build)?;
            mps.to_chain_state(Topology::Ring).map_err(build)?.0
        }
        "expander" => {
            arity(3, 3)?;
            let (d, bond, n) = (num(spec, fields[0])?, num(spec, fields[1])?, num(spec, fields[2])?);
            expander_state(d, bond, n, seed)
                .map_err(build)?
                .state
                .ok_or_else(|| usage(spec, "too large for a dense state"))?
        }
        "haar" if fields.len() == 1 && fields[0].contains(',') => {
            let dims = fields[0].split(',').map(|f| num(spec, f)).collect::<Result<Vec<usize>, _>>()?;
            let space = TensorSpace::new(dims).map_err(build)?;
            return Ok(Fixture::Factors(PureState::haar(space, seed).map_err(build)?));
        }
        "haar" => {
            arity(1, 2)?;
            let d = fields.get(1).map_or(Ok(2), |f| num(spec, f))?;
            haar_chain(num(spec, fields[0])?, d, seed).map_err(build)?
        }
        "product" => {
            arity(1, 2)?;
            let d = fields.get(1).map_or(Ok(2), |f| num(spec, f))?;
            product_zero(num(spec, fields[0])?, d).map_err(build)?
        }
        "plus" => {
            arity(1, 1)?;
            plus_state(num(spec, fields[0])?).map_err(build)?
        }
        "maxmixed" => {
            arity(1, 2)?;
            let d = fields.get(1).map_or(Ok(2), |f| num(spec, f))?;
            let topo = topology.unwrap_or(Topology::Ring);
            return Ok(Fixture::Mixed(MixedChain::maximally_mixed(num(spec, fields[0])?, d, topo).map_err(build)?));
        }
        "file" => {
            let f = File::open(rest).map_err(|e| usage(spec, e))?;
            read_chainstate(BufReader::new(f)).map_err(build)?
        }
        other => return Err(usage(spec, format!("unknown kind '{other}'"))),
    };
    Ok(Fixture::Pure(match topology {
        Some(t) => chain.with_topology(t),
        None => chain,
    }))
}

/// `0,2,5` or inclusive ranges `3-6`, mixed freely.
pub fn parse_sites(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("bad site list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_lists() {
        assert_eq!(parse_sites("0,2-4, 7").unwrap(), vec![0, 2, 3, 4, 7]);
        assert!(parse_sites("").is_err());
        assert!(parse_sites("3-1").is_err());
        assert!(parse_sites("a").is_err());
    }

    #[test]
    fn fixtures_parse() {
        let seed = RngSeed::new(1);
        assert!(matches!(parse("ghz:4", seed, None).unwrap(), Fixture::Pure(_)));
        assert!(matches!(parse("maxmixed:3", seed, None).unwrap(), Fixture::Mixed(_)));
        assert!(matches!(parse("haar:4,2,4", seed, None).unwrap(), Fixture::Factors(_)));
        let line = parse("product:3:3", seed, Some(Topology::Line)).unwrap();
        let s = line.sites().unwrap();
        assert_eq!((s.num_sites(), s.site_dim(), s.topology()), (3, 3, Topology::Line));
        for bad in ["ghz", "ghz:x", "tfim:4", "nope:3", "file:/nonexistent/x", "haar:2,0"] {
            assert!(matches!(parse(bad, seed, None), Err(Failure::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn seeded_fixtures_are_reproducible() {
        let a = parse("haar:4", RngSeed::new(3), None).unwrap();
        let b = parse("haar:4", RngSeed::new(3), None).unwrap();
        match (a, b) {
            (Fixture::Pure(a), Fixture::Pure(b)) => assert_eq!(a.amplitudes(), b.amplitudes()),
            _ => unreachable!(),
        }
    }
}
