#![allow(dead_code)] // each integration binary uses a different subset

//! Shared fixtures for the integration suites: an in-memory deployment
//! (moderator cores behind the loopback transport) and an HTTP deployment
//! (the same cores behind real sockets).

use cerberus::client::{LoopbackTransport, ModeratorRoster};
use cerberus::group::Suite;
use cerberus::keyfile::{ceremony, ShareFile};
use cerberus::modnode::{serve, DaemonHandle, ModeratorCore};
use cerberus::protocol::VotePolicy;
use cerberus::shamir::ThresholdParams;
use rand::rngs::OsRng;
use std::sync::Arc;

pub struct LoopbackDeployment<S: Suite> {
    pub shares: Vec<ShareFile<S>>,
    pub cores: Vec<Arc<ModeratorCore<S>>>,
    pub transport: Arc<LoopbackTransport<S>>,
    pub roster: ModeratorRoster<S>,
}

pub fn loopback_deployment<S: Suite>(
    k: u16,
    n: u16,
    policy: VotePolicy,
) -> LoopbackDeployment<S> {
    let params = ThresholdParams::new(k, n).expect("valid params");
    let shares = ceremony::<S, _>(params, &mut OsRng).expect("ceremony");
    let cores: Vec<Arc<ModeratorCore<S>>> = shares
        .iter()
        .map(|share| Arc::new(ModeratorCore::new(share.clone(), policy.clone(), 300)))
        .collect();
    let addrs: Vec<String> = (1..=n).map(|i| format!("loopback:{i}")).collect();
    let roster = ModeratorRoster::from_share_files(&shares, &addrs).expect("roster");
    let transport = Arc::new(LoopbackTransport::new(cores.clone()));
    LoopbackDeployment { shares, cores, transport, roster }
}

pub struct HttpDeployment<S: Suite> {
    pub shares: Vec<ShareFile<S>>,
    pub daemons: Vec<DaemonHandle>,
    pub roster: ModeratorRoster<S>,
}

pub fn http_deployment<S: Suite>(k: u16, n: u16, policy: VotePolicy) -> HttpDeployment<S> {
    let params = ThresholdParams::new(k, n).expect("valid params");
    let shares = ceremony::<S, _>(params, &mut OsRng).expect("ceremony");
    let mut daemons = Vec::new();
    let mut addrs = Vec::new();
    for share in &shares {
        let core = Arc::new(ModeratorCore::new(share.clone(), policy.clone(), 300));
        let daemon = serve(core, "127.0.0.1:0").expect("bind");
        addrs.push(daemon.addr().to_string());
        daemons.push(daemon);
    }
    let roster = ModeratorRoster::from_share_files(&shares, &addrs).expect("roster");
    HttpDeployment { shares, daemons, roster }
}
