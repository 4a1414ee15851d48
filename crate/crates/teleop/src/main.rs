use std::net::{IpAddr, SocketAddr};

use anyhow::Context;
use clap::Parser;
use jparse_core::kinematics::load_model;
use jparse_core::resolvers::ResolverConfig;
use jparse_teleop::server;
use jparse_teleop::session::{SessionConfig, SessionState};

#[derive(Parser)]
#[command(name = "jparse-teleop", version, about = "Serve a simulated arm over a JSON websocket at /ws")]
struct Args {
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Builtin model name or model JSON file.
    #[arg(long, default_value = "planar2r")]
    model: String,
    #[arg(long, default_value_t = 30.0)]
    tick_hz: f64,
    /// Initial resolver, `name:key=value,...`.
    #[arg(long, default_value = "jparse:gamma=0.1")]
    resolver: String,
    /// Uniform proportional gain.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Cap on the commanded twist norm; 0 disables it.
    #[arg(long, default_value_t = 1.0)]
    twist_cap: f64,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    anyhow::ensure!(args.tick_hz.is_finite() && args.tick_hz > 0.0, "--tick-hz must be positive");
    let model = load_model(&args.model).with_context(|| format!("loading model `{}`", args.model))?;
    let resolver: ResolverConfig = args.resolver.parse()?;
    let mut cfg = SessionConfig::with_defaults(model, args.tick_hz);
    cfg.resolver = resolver;
    cfg.gains.k = vec![args.k; cfg.gains.k.len()];
    cfg.gains.twist_cap = args.twist_cap;
    anyhow::ensure!(
        cfg.gains.k_dt() <= 2.0,
        "k / tick_hz = {} exceeds the discrete stability bound 2",
        cfg.gains.k_dt()
    );
    let session = SessionState::new(cfg)?;

    let addr = SocketAddr::new(args.host, args.port);
    let listener = server::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on ws://{}/ws", listener.local_addr()?);
    tokio::select! {
        r = server::serve(listener, session, args.tick_hz) => r?,
        _ = tokio::signal::ctrl_c() => eprintln!("shutting down"),
    }
    Ok(())
}
