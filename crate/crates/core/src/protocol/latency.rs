//! Round-trip latency over OSC/UDP.
//!
//! The probe runs one sender and one receiver thread on a shared UDP socket.
//! The sender stamps each `/matrix/ping` with its own clock; the receiver
//! matches echoes back to probe ids and hands round-trip samples over a
//! channel. [`EchoServer`] is the matching peer and can inject a fixed delay
//! to model a slow link.

use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::osc::{decode_ping, encode_ping, Ping};

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("at least one probe is required")]
    NoProbes,
    #[error("endpoint unreachable: no replies to {sent} probes")]
    Unreachable { sent: usize },
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    /// Gap between consecutive probes.
    pub interval: Duration,
    /// How long to wait for stragglers after the last probe is sent.
    pub timeout: Duration,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            interval: Duration::from_millis(5),
            timeout: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub sent: usize,
    pub received: usize,
    pub lost: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    /// Order statistics over round-trip samples in milliseconds.
    pub fn from_samples(sent: usize, samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median_ms = if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        // Nearest-rank percentile.
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(Self {
            sent,
            received: n,
            lost: sent.saturating_sub(n),
            median_ms,
            p95_ms: s[rank - 1],
            max_ms: s[n - 1],
        })
    }
}

fn local_bind_for(dest: SocketAddr) -> SocketAddr {
    match dest {
        SocketAddr::V4(a) if a.ip().is_loopback() => "127.0.0.1:0".parse().unwrap(),
        SocketAddr::V4(_) => "0.0.0.0:0".parse().unwrap(),
        SocketAddr::V6(a) if a.ip().is_loopback() => "[::1]:0".parse().unwrap(),
        SocketAddr::V6(_) => "[::]:0".parse().unwrap(),
    }
}

/// Sends `n_probes` pings to `dest` and reports round-trip statistics.
pub fn measure_latency(
    dest: SocketAddr,
    n_probes: usize,
    opts: ProbeOptions,
) -> Result<LatencyStats, LatencyError> {
    if n_probes == 0 {
        return Err(LatencyError::NoProbes);
    }
    let socket = UdpSocket::bind(local_bind_for(dest))?;
    let rx_socket = socket.try_clone()?;
    rx_socket.set_read_timeout(Some(Duration::from_millis(20)))?;

    let epoch = Instant::now();
    let deadline = epoch + opts.interval * n_probes as u32 + opts.timeout;
    let (tx, samples) = mpsc::channel::<f64>();

    let receiver = std::thread::spawn(move || {
        let mut seen = vec![false; n_probes];
        let mut got = 0usize;
        let mut buf = [0u8; 256];
        while got < n_probes && Instant::now() < deadline {
            let Ok((len, _)) = rx_socket.recv_from(&mut buf) else {
                continue;
            };
            let now_us = epoch.elapsed().as_micros() as u64;
            let Ok(ping) = decode_ping(&buf[..len]) else {
                continue;
            };
            let id = ping.id as usize;
            if id < n_probes && !seen[id] && ping.sent_us <= now_us {
                seen[id] = true;
                got += 1;
                let rtt_ms = (now_us - ping.sent_us) as f64 / 1000.0;
                if tx.send(rtt_ms).is_err() {
                    break;
                }
            }
        }
    });

    let mut delivered = 0usize;
    for id in 0..n_probes {
        let ping = Ping {
            id: id as u32,
            sent_us: epoch.elapsed().as_micros() as u64,
        };
        if socket.send_to(&encode_ping(ping), dest).is_ok() {
            delivered += 1;
        }
        if id + 1 < n_probes {
            std::thread::sleep(opts.interval);
        }
    }
    if delivered == 0 {
        // Nothing left the host; no point waiting for the timeout.
        return Err(LatencyError::Unreachable { sent: n_probes });
    }
    receiver.join().expect("latency receiver panicked");
    let rtts: Vec<f64> = samples.into_iter().collect();
    LatencyStats::from_samples(n_probes, &rtts).ok_or(LatencyError::Unreachable { sent: n_probes })
}

/// UDP peer that answers `/matrix/ping` by echoing it, optionally late.
pub struct EchoServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl EchoServer {
    pub fn spawn(bind: SocketAddr, delay: Duration) -> std::io::Result<Self> {
        let socket = UdpSocket::bind(bind)?;
        socket.set_read_timeout(Some(Duration::from_millis(20)))?;
        let addr = socket.local_addr()?;
        let send_socket = socket.try_clone()?;
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel::<(Instant, Vec<u8>, SocketAddr)>();

        let stop_rx = stop.clone();
        let listener = std::thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while !stop_rx.load(Ordering::Relaxed) {
                let Ok((len, from)) = socket.recv_from(&mut buf) else {
                    continue;
                };
                if decode_ping(&buf[..len]).is_ok() {
                    let due = Instant::now() + delay;
                    if tx.send((due, buf[..len].to_vec(), from)).is_err() {
                        break;
                    }
                }
            }
        });
        let replier = std::thread::spawn(move || {
            // Constant delay keeps the queue ordered by due time.
            for (due, bytes, to) in rx {
                let now = Instant::now();
                if due > now {
                    std::thread::sleep(due - now);
                }
                let _ = send_socket.send_to(&bytes, to);
            }
        });
        Ok(Self {
            addr,
            stop,
            threads: vec![listener, replier],
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for EchoServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}
