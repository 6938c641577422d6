//! Live session: one tick task owns the rod grid and publishes a frame every
//! period; WebSocket clients stream frames and send rod edits; an optional
//! OSC emitter forwards every frame; a UDP responder answers pings.
//!
//! WebSocket messages (JSON text):
//!
//! - server -> client: `{"type":"frame","seq":n,"positions":[144 counts]}`,
//!   `{"type":"mode","name":"additive"}`, `{"type":"error","reason":"..."}`
//! - client -> server: `{"type":"set","index":i,"value":v}`,
//!   `{"type":"sculpt","updates":[{"index":i,"value":v}, ...]}`,
//!   `{"type":"mode","name":"drums"}`
//!
//! A value above 0 holds the rod at that depth; 0 lets it spring back.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use matrix_core::exec::Exec;
use matrix_core::frame::{SurfaceFrame, MAX_COUNT, ROD_COUNT};
use matrix_core::mapping::SynthMode;
use matrix_core::protocol::{decode_ping, encode_osc_frame, DEFAULT_OSC_PORT};
use matrix_core::surface::{RodGrid, DEFAULT_FRAME_PERIOD_MS, DEFAULT_RETURN_RATE};
use serde::{Deserialize, Serialize};
use tokio::net::{TcpListener, UdpSocket};
use tokio::sync::{broadcast, mpsc, watch};
use tokio::task::JoinHandle;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bind: IpAddr,
    /// WebSocket/HTTP port; 0 picks a free one.
    pub port: u16,
    /// UDP port answering `/matrix/ping` and sending OSC frames; 0 picks a free one.
    pub osc_port: u16,
    pub osc_dest: Option<SocketAddr>,
    pub mode: SynthMode,
    /// Whether a granular source is loaded; granular mode is refused without one.
    pub granular_source: bool,
    pub frame_period: Duration,
    pub return_rate: f64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            osc_port: DEFAULT_OSC_PORT,
            osc_dest: None,
            mode: SynthMode::Additive,
            granular_source: false,
            frame_period: Duration::from_secs_f64(DEFAULT_FRAME_PERIOD_MS / 1000.0),
            return_rate: DEFAULT_RETURN_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Frame { seq: u8, positions: Vec<u8> },
    Mode { name: SynthMode },
    Error { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RodUpdate {
    index: i64,
    value: i64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ClientMessage {
    Set { index: i64, value: i64 },
    Sculpt { updates: Vec<RodUpdate> },
    Mode { name: String },
}

/// A validated client request.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// `(rod, counts)` pairs, applied in order.
    Edits(Vec<(usize, u8)>),
    Mode(SynthMode),
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Frame(SurfaceFrame),
    Mode(SynthMode),
}

impl From<Event> for ServerMessage {
    fn from(e: Event) -> Self {
        match e {
            Event::Frame(f) => ServerMessage::Frame {
                seq: f.seq(),
                positions: f.positions().to_vec(),
            },
            Event::Mode(name) => ServerMessage::Mode { name },
        }
    }
}

fn check_update(index: i64, value: i64) -> Result<(usize, u8), String> {
    if !(0..ROD_COUNT as i64).contains(&index) {
        return Err(format!("rod index {index} out of range 0..=143"));
    }
    if !(0..=MAX_COUNT as i64).contains(&value) {
        return Err(format!("value {value} out of range 0..=127"));
    }
    Ok((index as usize, value as u8))
}

/// Parses and validates one client text message.
pub fn parse_client_message(text: &str, granular_source: bool) -> Result<Command, String> {
    let msg: ClientMessage = serde_json::from_str(text).map_err(|e| format!("bad message: {e}"))?;
    match msg {
        ClientMessage::Set { index, value } => Ok(Command::Edits(vec![check_update(index, value)?])),
        ClientMessage::Sculpt { updates } => updates
            .iter()
            .map(|u| check_update(u.index, u.value))
            .collect::<Result<_, _>>()
            .map(Command::Edits),
        ClientMessage::Mode { name } => {
            let mode: SynthMode = name.parse().map_err(|_| format!("unknown mode {name:?}"))?;
            if mode == SynthMode::Granular && !granular_source {
                return Err("granular mode needs a source WAV; start the server with --source".into());
            }
            Ok(Command::Mode(mode))
        }
    }
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::UnboundedSender<Command>,
    events: broadcast::Sender<Event>,
    mode: watch::Receiver<SynthMode>,
    granular_source: bool,
    frame_period_ms: f64,
}

/// A running session.
pub struct Server {
    http_addr: SocketAddr,
    osc_addr: SocketAddr,
    shutdown: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl Server {
    pub async fn start(opts: ServeOptions) -> std::io::Result<Self> {
        let listener = TcpListener::bind((opts.bind, opts.port)).await?;
        let http_addr = listener.local_addr()?;
        let udp = Arc::new(UdpSocket::bind((opts.bind, opts.osc_port)).await?);
        let osc_addr = udp.local_addr()?;

        let (shutdown, shutdown_rx) = watch::channel(false);
        let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
        let (events, _) = broadcast::channel(256);
        let (mode_tx, mode_rx) = watch::channel(opts.mode);

        let period_ms = opts.frame_period.as_secs_f64() * 1000.0;
        let grid = RodGrid::with_dynamics(period_ms, opts.return_rate).with_exec(Exec::Sequential);
        let mut tasks = vec![tokio::spawn(tick_loop(
            grid,
            opts.frame_period,
            cmd_rx,
            events.clone(),
            mode_tx,
            shutdown_rx.clone(),
        ))];
        if let Some(dest) = opts.osc_dest {
            tasks.push(tokio::spawn(osc_emitter(udp.clone(), dest, events.subscribe())));
        }
        tasks.push(tokio::spawn(ping_responder(udp, shutdown_rx.clone())));

        let state = AppState {
            commands: cmd_tx,
            events,
            mode: mode_rx,
            granular_source: opts.granular_source,
            frame_period_ms: period_ms,
        };
        let app = Router::new()
            .route("/", get(info))
            .route("/ws", get(ws_route))
            .with_state(state);
        let mut stop = shutdown_rx;
        tasks.push(tokio::spawn(async move {
            let graceful = async move {
                let _ = stop.wait_for(|&s| s).await;
            };
            if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(graceful).await {
                tracing::error!("http server: {e}");
            }
        }));
        tracing::info!(%http_addr, %osc_addr, "serving");
        Ok(Self {
            http_addr,
            osc_addr,
            shutdown,
            tasks,
        })
    }

    pub fn http_addr(&self) -> SocketAddr {
        self.http_addr
    }

    /// UDP address answering pings.
    pub fn osc_addr(&self) -> SocketAddr {
        self.osc_addr
    }

    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        for t in self.tasks {
            if tokio::time::timeout(Duration::from_secs(2), t).await.is_err() {
                tracing::warn!("task did not stop in time");
            }
        }
    }
}

async fn tick_loop(
    mut grid: RodGrid,
    period: Duration,
    mut commands: mpsc::UnboundedReceiver<Command>,
    events: broadcast::Sender<Event>,
    mode: watch::Sender<SynthMode>,
    mut shutdown: watch::Receiver<bool>,
) {
    let mut targets: [Option<f64>; ROD_COUNT] = [None; ROD_COUNT];
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let mut seq = 0u64;
    loop {
        tokio::select! {
            _ = ticker.tick() => {}
            _ = shutdown.wait_for(|&s| s) => break,
        }
        while let Ok(cmd) = commands.try_recv() {
            match cmd {
                Command::Edits(edits) => {
                    for (i, v) in edits {
                        targets[i] = (v > 0).then_some(v as f64);
                    }
                }
                Command::Mode(m) => {
                    mode.send_replace(m);
                    let _ = events.send(Event::Mode(m));
                    tracing::info!(mode = m.name(), "mode changed");
                }
            }
        }
        grid.advance(&targets);
        let _ = events.send(Event::Frame(grid.snapshot(seq)));
        seq += 1;
    }
}

async fn osc_emitter(socket: Arc<UdpSocket>, dest: SocketAddr, mut events: broadcast::Receiver<Event>) {
    loop {
        match events.recv().await {
            Ok(Event::Frame(f)) => {
                if let Err(e) = socket.send_to(&encode_osc_frame(&f), dest).await {
                    tracing::debug!("osc send to {dest}: {e}");
                }
            }
            Ok(_) => {}
            Err(broadcast::error::RecvError::Lagged(n)) => tracing::warn!("osc emitter skipped {n} frames"),
            Err(broadcast::error::RecvError::Closed) => break,
        }
    }
}

async fn ping_responder(socket: Arc<UdpSocket>, mut shutdown: watch::Receiver<bool>) {
    let mut buf = [0u8; 1024];
    loop {
        tokio::select! {
            r = socket.recv_from(&mut buf) => match r {
                Ok((n, from)) => {
                    if decode_ping(&buf[..n]).is_ok() {
                        let _ = socket.send_to(&buf[..n], from).await;
                    }
                }
                // ICMP errors from the OSC destination surface here.
                Err(e) => tracing::debug!("udp recv: {e}"),
            },
            _ = async { let _ = shutdown.wait_for(|&s| s).await; } => break,
        }
    }
}

async fn info(State(st): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "rods": ROD_COUNT,
        "frame_period_ms": st.frame_period_ms,
        "mode": *st.mode.borrow(),
        "websocket": "/ws",
    }))
}

async fn ws_route(ws: WebSocketUpgrade, State(st): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client_session(socket, st))
}

async fn client_session(socket: WebSocket, st: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut events = st.events.subscribe();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<ServerMessage>();
    let hello = ServerMessage::Mode {
        name: *st.mode.borrow(),
    };

    let writer = tokio::spawn(async move {
        let mut next = Some(hello);
        loop {
            let msg = match next.take() {
                Some(m) => m,
                None => tokio::select! {
                    e = events.recv() => match e {
                        Ok(e) => e.into(),
                        Err(broadcast::error::RecvError::Lagged(n)) => {
                            tracing::debug!("client lagged {n} events");
                            continue;
                        }
                        Err(broadcast::error::RecvError::Closed) => break,
                    },
                    r = replies.recv() => match r {
                        Some(m) => m,
                        None => break,
                    },
                },
            };
            let text = serde_json::to_string(&msg).expect("server messages serialize");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let reply = match msg {
            Message::Text(t) => match parse_client_message(t.as_str(), st.granular_source) {
                Ok(cmd) => {
                    if st.commands.send(cmd).is_err() {
                        break;
                    }
                    None
                }
                Err(reason) => Some(reason),
            },
            Message::Binary(_) => Some("binary messages are not supported".to_string()),
            Message::Close(_) => break,
            _ => None,
        };
        if let Some(reason) = reply {
            tracing::debug!(%reason, "rejected client message");
            let _ = reply_tx.send(ServerMessage::Error { reason });
        }
    }
    drop(reply_tx);
    writer.abort();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_set_and_sculpt() {
        assert_eq!(
            parse_client_message(r#"{"type":"set","index":0,"value":127}"#, false),
            Ok(Command::Edits(vec![(0, 127)]))
        );
        assert_eq!(
            parse_client_message(
                r#"{"type":"sculpt","updates":[{"index":36,"value":10},{"index":47,"value":0}]}"#,
                false
            ),
            Ok(Command::Edits(vec![(36, 10), (47, 0)]))
        );
    }

    #[test]
    fn rejects_bad_messages() {
        for bad in [
            r#"{"type":"set","index":144,"value":1}"#,
            r#"{"type":"set","index":-1,"value":1}"#,
            r#"{"type":"set","index":3,"value":128}"#,
            r#"{"type":"sculpt","updates":[{"index":3,"value":5},{"index":999,"value":5}]}"#,
            r#"{"type":"mode","name":"theremin"}"#,
            r#"{"type":"teleport"}"#,
            r#"{"type":"set","index":1,"value":1,"extra":true}"#,
            "not json",
        ] {
            assert!(parse_client_message(bad, true).is_err(), "{bad}");
        }
    }

    #[test]
    fn granular_needs_source() {
        let m = r#"{"type":"mode","name":"granular"}"#;
        let err = parse_client_message(m, false).unwrap_err();
        assert!(err.contains("source"));
        assert_eq!(parse_client_message(m, true), Ok(Command::Mode(SynthMode::Granular)));
    }

    #[test]
    fn server_message_shapes() {
        let f = ServerMessage::from(Event::Frame(SurfaceFrame::uniform(5, 1)));
        let v: serde_json::Value = serde_json::to_value(&f).unwrap();
        assert_eq!(v["type"], "frame");
        assert_eq!(v["seq"], 5);
        assert_eq!(v["positions"].as_array().unwrap().len(), 144);
        let m = serde_json::to_value(ServerMessage::Mode { name: SynthMode::Drums }).unwrap();
        assert_eq!(m, serde_json::json!({"type": "mode", "name": "drums"}));
        let e = serde_json::to_value(ServerMessage::Error { reason: "x".into() }).unwrap();
        assert_eq!(e, serde_json::json!({"type": "error", "reason": "x"}));
    }
}
