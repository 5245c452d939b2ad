//! Two-process execution of the protocol over a byte stream.
//!
//! Alice listens, Bob connects. The shared entanglement is simulated by a
//! referee fabric: Alice samples the collapse locally and ships the
//! canonical collapsed angle χ on a `QuantumCollapse` message, which stands
//! in for the qubit Bob would physically hold and is excluded from the
//! classical-bit audit. The single audited classical signal per trial is
//! the `ClassicalBit` carrying β. Bob replies with his guesses; Alice, who
//! knows the decoding rule, reconstructs his ±1 outcomes from them.
//!
//! Framing is a 4-byte big-endian payload length followed by UTF-8 JSON.
//! Angles travel as 17-significant-digit decimal strings so both endpoints
//! reconstruct bit-identical `f64`s; a loopback run therefore reproduces
//! the in-process [`run_trials`](crate::protocol::run_trials) transcript
//! exactly (same seed, shard 0 streams on both sides).
//!
//! Ablation mode (`ablate_beta`) suppresses the `ClassicalBit` message;
//! Bob decodes assuming β = 0, and both channels collapse to noise — the
//! empirical demonstration that β is the protocol's only classical signal.
//! Aggregate reporting after the trial loop (Bob's tally echo, Alice's
//! final tables) is part of the post-run analysis, not the per-trial
//! decoding budget the audit certifies.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CracError, Result};
use crate::geometry::{phase_state, EquatorDirection};
use crate::protocol::{
    alice_draw, decode, guess, stats_from_records, ChannelStats, ProtocolConfig, TrialRecord,
};
use crate::rng::{stream, Role};

const MAX_FRAME: u32 = 1 << 20;
const IO_TIMEOUT: Duration = Duration::from_secs(30);

/// Everything that crosses the connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum WireMessage {
    Hello {
        role: String,
        config_sha256: String,
        ablate_beta: bool,
    },
    TrialStart {
        trial: u64,
    },
    /// Referee-fabric message: the collapsed angle of Bob's qubit, as a
    /// 17-significant-digit decimal string.
    QuantumCollapse {
        trial: u64,
        chi: String,
    },
    /// The audited classical channel: exactly one bit of payload.
    ClassicalBit {
        trial: u64,
        beta: u8,
    },
    Guess {
        trial: u64,
        guess_a: u8,
        guess_b: u8,
    },
    /// End-of-run aggregate echo; Alice's copy carries the full tables.
    Stats {
        trials: u64,
        guess_zero_a: u64,
        guess_zero_b: u64,
        classical_bits: u64,
        channel_stats: Option<ChannelStats>,
    },
    Bye,
}

/// Classical-budget certification, counted on Bob's side of the wire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitBudgetAudit {
    pub trials: u64,
    pub classical_bits_observed: u64,
    pub quantum_fabric_messages: u64,
}

impl BitBudgetAudit {
    /// One classical bit per trial, exactly.
    pub fn conforming(&self) -> bool {
        self.classical_bits_observed == self.trials
    }
}

/// Endpoint options beyond the protocol config.
#[derive(Clone, Debug, Default)]
pub struct NetOptions {
    pub ablate_beta: bool,
    pub transcript: Option<PathBuf>,
}

/// Alice's view of a completed run.
#[derive(Clone, Debug)]
pub struct AliceRun {
    pub records: Vec<TrialRecord>,
    pub stats: ChannelStats,
    pub bob_classical_bits: u64,
}

// ---------------------------------------------------------------------------
// framing
// ---------------------------------------------------------------------------

pub(crate) fn write_frame(w: &mut impl Write, msg: &WireMessage) -> Result<()> {
    let payload = serde_json::to_vec(msg)
        .map_err(|e| CracError::Frame(format!("encode failed: {e}")))?;
    if payload.len() > MAX_FRAME as usize {
        return Err(CracError::Frame(format!(
            "frame of {} bytes exceeds the {MAX_FRAME}-byte cap",
            payload.len()
        )));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())
        .and_then(|_| w.write_all(&payload))
        .and_then(|_| w.flush())
        .map_err(|e| CracError::Transport(format!("send failed: {e}")))
}

pub(crate) fn read_frame(r: &mut impl Read) -> Result<WireMessage> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)
        .map_err(|e| CracError::Transport(format!("receive failed: {e}")))?;
    let n = u32::from_be_bytes(len);
    if n > MAX_FRAME {
        return Err(CracError::Frame(format!(
            "declared frame length {n} exceeds the {MAX_FRAME}-byte cap"
        )));
    }
    let mut payload = vec![0u8; n as usize];
    r.read_exact(&mut payload)
        .map_err(|e| CracError::Transport(format!("receive failed: {e}")))?;
    serde_json::from_slice(&payload)
        .map_err(|e| CracError::Frame(format!("malformed frame: {e}")))
}

/// Canonical config fingerprint for the handshake.
pub fn config_hash(cfg: &ProtocolConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serialization is infallible");
    let digest = Sha256::digest(&json);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

fn chi_to_wire(chi: EquatorDirection) -> String {
    // 17 significant digits: exact f64 round-trip.
    format!("{:.16e}", chi.radians())
}

fn chi_from_wire(s: &str) -> Result<EquatorDirection> {
    let raw: f64 = s
        .parse()
        .map_err(|e| CracError::Frame(format!("bad chi field {s:?}: {e}")))?;
    if !raw.is_finite() {
        return Err(CracError::Frame(format!("non-finite chi {s:?}")));
    }
    Ok(EquatorDirection::new(raw))
}

/// Optional JSONL dump of every message as seen by this endpoint.
struct Tape {
    out: Option<BufWriter<File>>,
}

impl Tape {
    fn open(path: &Option<PathBuf>) -> Result<Self> {
        let out = match path {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        Ok(Tape { out })
    }

    fn log(&mut self, msg: &WireMessage) -> Result<()> {
        if let Some(w) = &mut self.out {
            serde_json::to_writer(&mut *w, msg)
                .map_err(|e| CracError::Frame(format!("transcript write failed: {e}")))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(w) = &mut self.out {
            w.flush()?;
        }
        Ok(())
    }
}

fn send(stream: &mut impl Write, tape: &mut Tape, msg: &WireMessage) -> Result<()> {
    write_frame(stream, msg)?;
    tape.log(msg)
}

fn recv(stream: &mut impl Read, tape: &mut Tape) -> Result<WireMessage> {
    let msg = read_frame(stream)?;
    tape.log(&msg)?;
    Ok(msg)
}

// ---------------------------------------------------------------------------
// sessions
// ---------------------------------------------------------------------------

fn alice_session<S: Read + Write>(
    conn: &mut S,
    cfg: &ProtocolConfig,
    opts: &NetOptions,
) -> Result<AliceRun> {
    let mut tape = Tape::open(&opts.transcript)?;
    let my_hash = config_hash(cfg);

    match recv(conn, &mut tape)? {
        WireMessage::Hello {
            role,
            config_sha256,
            ablate_beta,
        } if role == "bob" && config_sha256 == my_hash && ablate_beta == opts.ablate_beta => {}
        WireMessage::Hello { .. } => {
            send(conn, &mut tape, &WireMessage::Bye)?;
            return Err(CracError::Transport(
                "handshake refused: config or mode mismatch".into(),
            ));
        }
        other => {
            return Err(CracError::Frame(format!(
                "expected Hello, got {other:?}"
            )))
        }
    }
    send(
        conn,
        &mut tape,
        &WireMessage::Hello {
            role: "alice".into(),
            config_sha256: my_hash,
            ablate_beta: opts.ablate_beta,
        },
    )?;

    let mut rng = stream(cfg.seed, 0, Role::Alice);
    let mut records = Vec::with_capacity(cfg.trials as usize);
    let mut guess_zero = [0u64; 2];
    let mut bits_sent = 0u64;
    for t in 0..cfg.trials {
        let draw = alice_draw(cfg, &mut rng)?;
        send(conn, &mut tape, &WireMessage::TrialStart { trial: t })?;
        send(
            conn,
            &mut tape,
            &WireMessage::QuantumCollapse {
                trial: t,
                chi: chi_to_wire(draw.chi),
            },
        )?;
        if !opts.ablate_beta {
            send(
                conn,
                &mut tape,
                &WireMessage::ClassicalBit {
                    trial: t,
                    beta: draw.beta,
                },
            )?;
            bits_sent += 1;
        }
        let (guess_a, guess_b) = match recv(conn, &mut tape)? {
            WireMessage::Guess {
                trial,
                guess_a,
                guess_b,
            } if trial == t => (guess_a, guess_b),
            other => {
                return Err(CracError::Frame(format!(
                    "expected Guess for trial {t}, got {other:?}"
                )))
            }
        };
        // Invert the decoding rule with the β Bob actually used to recover
        // his ±1 outcomes.
        let beta_used = if opts.ablate_beta { 0 } else { draw.beta };
        let o_prime_a = guess_a ^ beta_used;
        let o_prime_b = guess_b ^ beta_used;
        let outcome_a = 1 - 2 * o_prime_a as i8;
        let outcome_b = 1 - 2 * o_prime_b as i8;
        guess_zero[0] += u64::from(guess_a == 0);
        guess_zero[1] += u64::from(guess_b == 0);
        records.push(TrialRecord {
            bits: draw.bits,
            phi: draw.phi,
            beta: draw.beta,
            outcome_a,
            outcome_b,
            guess_a,
            guess_b,
        });
    }

    let stats = stats_from_records(&records, bits_sent)?;
    match recv(conn, &mut tape)? {
        WireMessage::Stats {
            trials,
            guess_zero_a,
            guess_zero_b,
            classical_bits,
            channel_stats: None,
        } if trials == cfg.trials
            && guess_zero_a == guess_zero[0]
            && guess_zero_b == guess_zero[1]
            && classical_bits == bits_sent =>
        {
            send(
                conn,
                &mut tape,
                &WireMessage::Stats {
                    trials,
                    guess_zero_a,
                    guess_zero_b,
                    classical_bits,
                    channel_stats: Some(stats),
                },
            )?;
        }
        other => {
            return Err(CracError::Transport(format!(
                "stats echo mismatch: {other:?}"
            )))
        }
    }
    send(conn, &mut tape, &WireMessage::Bye)?;
    match recv(conn, &mut tape)? {
        WireMessage::Bye => {}
        other => {
            return Err(CracError::Frame(format!(
                "expected closing Bye, got {other:?}"
            )))
        }
    }
    // The peer has said Bye and closes; nothing may trail it.
    let mut probe = [0u8; 1];
    match conn.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => {
            return Err(CracError::Frame(
                "unread bytes after closing handshake".into(),
            ))
        }
        Err(e) => {
            return Err(CracError::Transport(format!(
                "close check failed: {e}"
            )))
        }
    }
    tape.finish()?;
    Ok(AliceRun {
        records,
        stats,
        bob_classical_bits: bits_sent,
    })
}

fn bob_session<S: Read + Write>(
    conn: &mut S,
    cfg: &ProtocolConfig,
    opts: &NetOptions,
) -> Result<(ChannelStats, BitBudgetAudit)> {
    let mut tape = Tape::open(&opts.transcript)?;
    let my_hash = config_hash(cfg);
    send(
        conn,
        &mut tape,
        &WireMessage::Hello {
            role: "bob".into(),
            config_sha256: my_hash.clone(),
            ablate_beta: opts.ablate_beta,
        },
    )?;
    match recv(conn, &mut tape)? {
        WireMessage::Hello {
            role,
            config_sha256,
            ablate_beta,
        } if role == "alice" && config_sha256 == my_hash && ablate_beta == opts.ablate_beta => {}
        WireMessage::Bye => {
            return Err(CracError::Transport(
                "handshake refused by peer".into(),
            ))
        }
        other => {
            return Err(CracError::Frame(format!(
                "expected Hello, got {other:?}"
            )))
        }
    }

    let mut rng = stream(cfg.seed, 0, Role::Bob);
    let mut audit = BitBudgetAudit {
        trials: cfg.trials,
        classical_bits_observed: 0,
        quantum_fabric_messages: 0,
    };
    let mut guess_zero = [0u64; 2];
    for t in 0..cfg.trials {
        match recv(conn, &mut tape)? {
            WireMessage::TrialStart { trial } if trial == t => {}
            other => {
                return Err(CracError::Frame(format!(
                    "expected TrialStart {t}, got {other:?}"
                )))
            }
        }
        let chi = match recv(conn, &mut tape)? {
            WireMessage::QuantumCollapse { trial, chi } if trial == t => {
                audit.quantum_fabric_messages += 1;
                chi_from_wire(&chi)?
            }
            other => {
                return Err(CracError::Frame(format!(
                    "expected QuantumCollapse {t}, got {other:?}"
                )))
            }
        };
        let beta_used = if opts.ablate_beta {
            0
        } else {
            match recv(conn, &mut tape)? {
                WireMessage::ClassicalBit { trial, beta } if trial == t && beta <= 1 => {
                    audit.classical_bits_observed += 1;
                    beta
                }
                other => {
                    return Err(CracError::Frame(format!(
                        "expected ClassicalBit {t}, got {other:?}"
                    )))
                }
            }
        };
        let (outcome_a, outcome_b) = decode(&phase_state(chi), cfg, &mut rng)?;
        let guess_a = guess(outcome_a, beta_used);
        let guess_b = guess(outcome_b, beta_used);
        guess_zero[0] += u64::from(guess_a == 0);
        guess_zero[1] += u64::from(guess_b == 0);
        send(
            conn,
            &mut tape,
            &WireMessage::Guess {
                trial: t,
                guess_a,
                guess_b,
            },
        )?;
    }

    send(
        conn,
        &mut tape,
        &WireMessage::Stats {
            trials: cfg.trials,
            guess_zero_a: guess_zero[0],
            guess_zero_b: guess_zero[1],
            classical_bits: audit.classical_bits_observed,
            channel_stats: None,
        },
    )?;
    let stats = match recv(conn, &mut tape)? {
        WireMessage::Stats {
            channel_stats: Some(stats),
            ..
        } => stats,
        other => {
            return Err(CracError::Transport(format!(
                "expected final Stats, got {other:?}"
            )))
        }
    };
    match recv(conn, &mut tape)? {
        WireMessage::Bye => {}
        other => {
            return Err(CracError::Frame(format!(
                "expected Bye, got {other:?}"
            )))
        }
    }
    send(conn, &mut tape, &WireMessage::Bye)?;
    tape.finish()?;
    Ok((stats, audit))
}

// ---------------------------------------------------------------------------
// endpoints
// ---------------------------------------------------------------------------

fn configure_socket(sock: &TcpStream) -> Result<()> {
    sock.set_read_timeout(Some(IO_TIMEOUT))
        .and_then(|_| sock.set_write_timeout(Some(IO_TIMEOUT)))
        .and_then(|_| sock.set_nodelay(true))
        .map_err(|e| CracError::Transport(format!("socket setup failed: {e}")))
}

/// Run Alice on an already-bound listener (accepts one connection).
pub fn serve_alice_on(
    listener: TcpListener,
    cfg: &ProtocolConfig,
    opts: &NetOptions,
) -> Result<AliceRun> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(CracError::EmptyRun("trials = 0".into()));
    }
    let (mut conn, _peer) = listener
        .accept()
        .map_err(|e| CracError::Transport(format!("accept failed: {e}")))?;
    configure_socket(&conn)?;
    alice_session(&mut conn, cfg, opts)
}

/// Bind `addr` and run Alice's endpoint for one connection.
pub fn serve_alice(cfg: &ProtocolConfig, addr: &str, opts: &NetOptions) -> Result<AliceRun> {
    let listener = TcpListener::bind(addr)
        .map_err(|e| CracError::Transport(format!("bind {addr} failed: {e}")))?;
    serve_alice_on(listener, cfg, opts)
}

/// Connect to Alice at `addr` and run Bob's endpoint.
pub fn serve_bob(
    cfg: &ProtocolConfig,
    addr: impl ToSocketAddrs + std::fmt::Debug,
    opts: &NetOptions,
) -> Result<(ChannelStats, BitBudgetAudit)> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(CracError::EmptyRun("trials = 0".into()));
    }
    let mut conn = TcpStream::connect(&addr)
        .map_err(|e| CracError::Transport(format!("connect {addr:?} failed: {e}")))?;
    configure_socket(&conn)?;
    bob_session(&mut conn, cfg, opts)
}

/// Run both endpoints over localhost and return their views. The Alice
/// endpoint runs on a helper thread; errors from either side propagate.
pub fn loopback_run(
    cfg: &ProtocolConfig,
    opts: &NetOptions,
) -> Result<(AliceRun, ChannelStats, BitBudgetAudit)> {
    let listener = TcpListener::bind("127.0.0.1:0")
        .map_err(|e| CracError::Transport(format!("bind failed: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CracError::Transport(format!("local_addr failed: {e}")))?;
    let alice_cfg = *cfg;
    let alice_opts = opts.clone();
    let mut bob_result = None;
    let mut alice_result = None;
    std::thread::scope(|scope| {
        let alice = scope.spawn(move || serve_alice_on(listener, &alice_cfg, &alice_opts));
        let bob_opts = NetOptions {
            ablate_beta: opts.ablate_beta,
            // A shared transcript path would interleave; Bob keeps his own
            // only when explicitly driven via serve_bob.
            transcript: None,
        };
        bob_result = Some(serve_bob(cfg, addr, &bob_opts));
        alice_result = Some(alice.join().expect("alice endpoint panicked"));
    });
    let (stats, audit) = bob_result.expect("bob endpoint did not run")?;
    let run = alice_result.expect("alice endpoint did not run")?;
    Ok((run, stats, audit))
}
