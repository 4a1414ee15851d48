//! Websocket front end. A single tick task owns the session; connection
//! tasks talk to it only through channels.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};

use crate::protocol::{decode_client_text, Envelope, ErrorPayload, SeqGuard, StatePayload};
use crate::session::{apply_command, tick, Command, SessionState};

const STATE_BUFFER: usize = 64;

#[derive(Debug)]
struct Inbound {
    seq: u64,
    command: Command,
    reply: mpsc::UnboundedSender<ErrorPayload>,
}

#[derive(Clone)]
struct Hub {
    commands: mpsc::UnboundedSender<Inbound>,
    states: broadcast::Sender<Arc<StatePayload>>,
}

pub fn router(session: SessionState, tick_hz: f64) -> Router {
    let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
    let (state_tx, _) = broadcast::channel(STATE_BUFFER);
    tokio::spawn(tick_loop(session, tick_hz, cmd_rx, state_tx.clone()));
    let hub = Hub {
        commands: cmd_tx,
        states: state_tx,
    };
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(hub)
}

pub async fn serve(listener: TcpListener, session: SessionState, tick_hz: f64) -> std::io::Result<()> {
    axum::serve(listener, router(session, tick_hz)).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

async fn tick_loop(
    mut session: SessionState,
    tick_hz: f64,
    mut commands: mpsc::UnboundedReceiver<Inbound>,
    states: broadcast::Sender<Arc<StatePayload>>,
) {
    let mut clock = tokio::time::interval(Duration::from_secs_f64(1.0 / tick_hz));
    clock.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        clock.tick().await;
        loop {
            match commands.try_recv() {
                Ok(inbound) => match apply_command(&session, &inbound.command) {
                    Ok(next) => session = next,
                    Err(e) => {
                        let _ = inbound.reply.send(ErrorPayload {
                            code: e.code(),
                            message: e.to_string(),
                            in_reply_to: Some(inbound.seq),
                        });
                    }
                },
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return,
            }
        }
        match tick(&session) {
            Ok((next, snapshot)) => {
                if snapshot.speed_bound_ok == Some(false) {
                    eprintln!(
                        "speed bound violated at tick {}: |q_dot| exceeds {:?}",
                        snapshot.tick, snapshot.speed_bound
                    );
                }
                session = next;
                let _ = states.send(Arc::new(snapshot));
            }
            Err(e) => {
                eprintln!("tick {} failed: {e}; holding", session.tick);
                session.tick += 1;
            }
        }
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

async fn connection(socket: WebSocket, hub: Hub) {
    let (mut sink, mut stream) = socket.split();
    let (err_tx, mut err_rx) = mpsc::unbounded_channel::<ErrorPayload>();
    let mut states = hub.states.subscribe();

    let writer = tokio::spawn(async move {
        let mut seq: u64 = 0;
        loop {
            let env = tokio::select! {
                e = err_rx.recv() => match e {
                    Some(e) => Envelope::new("error", seq + 1, e),
                    None => break,
                },
                s = states.recv() => match s {
                    Ok(s) => Envelope::new("state", seq + 1, &*s),
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            seq += 1;
            if sink.send(Message::Text(env.to_text().into())).await.is_err() {
                break;
            }
        }
    });

    let mut guard = SeqGuard::default();
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        match decode_client_text(text.as_str(), &mut guard) {
            Ok((seq, command)) => {
                let inbound = Inbound {
                    seq,
                    command,
                    reply: err_tx.clone(),
                };
                if hub.commands.send(inbound).is_err() {
                    break;
                }
            }
            Err(reply) => {
                let _ = err_tx.send(reply);
            }
        }
    }
    drop(err_tx);
    writer.abort();
}
