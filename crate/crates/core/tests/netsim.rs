//! Two real endpoints on separate threads, exercised through the public
//! `serve_alice_on` / `serve_bob` API over localhost TCP.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::Instant;

use cracsim::error::CracError;
use cracsim::geometry::EquatorDirection;
use cracsim::machines::ClonerAngle;
use cracsim::netsim::{serve_alice_on, serve_bob, NetOptions, WireMessage};
use cracsim::protocol::{run_trials, BitsPrior, PhiMode, ProtocolConfig};

fn test_config(trials: u64, seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        axis_a: EquatorDirection::new(0.0),
        axis_b: EquatorDirection::new(std::f64::consts::FRAC_PI_2),
        cloner_eta: ClonerAngle::new(FRAC_PI_4).unwrap(),
        phi_mode: PhiMode::Fixed {
            angle: EquatorDirection::new(FRAC_PI_4),
        },
        bits_prior: BitsPrior::uniform(),
        trials,
        seed,
    }
}

fn bound_listener() -> (TcpListener, std::net::SocketAddr) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    (listener, addr)
}

#[test]
fn endpoints_agree_and_both_transcripts_record_the_same_wire() {
    let cfg = test_config(500, 31);
    let dir = tempfile::tempdir().unwrap();
    let alice_tape = dir.path().join("alice.jsonl");
    let bob_tape = dir.path().join("bob.jsonl");

    let (listener, addr) = bound_listener();
    let alice_cfg = cfg;
    let alice_opts = NetOptions {
        ablate_beta: false,
        transcript: Some(alice_tape.clone()),
    };
    let alice = thread::spawn(move || serve_alice_on(listener, &alice_cfg, &alice_opts));
    let bob_opts = NetOptions {
        ablate_beta: false,
        transcript: Some(bob_tape.clone()),
    };
    let (bob_stats, audit) = serve_bob(&cfg, addr, &bob_opts).unwrap();
    let run = alice.join().unwrap().unwrap();

    let (records, stats) = run_trials(&cfg).unwrap();
    assert_eq!(run.records, records, "wire run must replay the local engine");
    assert_eq!(run.stats, stats);
    assert_eq!(bob_stats, stats, "Bob's copy of the tables matches");
    assert!(audit.conforming());
    assert_eq!(audit.classical_bits_observed, 500);
    assert_eq!(audit.quantum_fabric_messages, 500);

    // Every frame is seen by both sides in the same order, so the tapes are
    // byte-identical.
    let alice_text = std::fs::read_to_string(&alice_tape).unwrap();
    let bob_text = std::fs::read_to_string(&bob_tape).unwrap();
    assert_eq!(alice_text, bob_text);

    let mut counts = std::collections::HashMap::new();
    for line in alice_text.lines() {
        let msg: WireMessage = serde_json::from_str(line).unwrap();
        let kind = match msg {
            WireMessage::Hello { .. } => "hello",
            WireMessage::TrialStart { .. } => "trial_start",
            WireMessage::QuantumCollapse { .. } => "collapse",
            WireMessage::ClassicalBit { .. } => "bit",
            WireMessage::Guess { .. } => "guess",
            WireMessage::Stats { .. } => "stats",
            WireMessage::Bye => "bye",
        };
        *counts.entry(kind).or_insert(0u64) += 1;
    }
    assert_eq!(counts["hello"], 2);
    assert_eq!(counts["trial_start"], 500);
    assert_eq!(counts["collapse"], 500);
    assert_eq!(counts["bit"], 500, "exactly one classical bit per trial");
    assert_eq!(counts["guess"], 500);
    assert_eq!(counts["stats"], 2);
    assert_eq!(counts["bye"], 2);
}

#[test]
fn handshake_rejects_a_config_mismatch() {
    let (listener, addr) = bound_listener();
    let alice_cfg = test_config(50, 1);
    let alice = thread::spawn(move || {
        serve_alice_on(listener, &alice_cfg, &NetOptions::default())
    });

    let mut bob_cfg = test_config(50, 1);
    bob_cfg.cloner_eta = ClonerAngle::new(0.3).unwrap();
    let bob_err = serve_bob(&bob_cfg, addr, &NetOptions::default()).unwrap_err();
    assert!(
        matches!(bob_err, CracError::Transport(_) | CracError::Frame(_)),
        "{bob_err}"
    );
    let alice_err = alice.join().unwrap().unwrap_err();
    assert!(matches!(alice_err, CracError::Transport(_)), "{alice_err}");
    assert!(alice_err.to_string().contains("handshake"), "{alice_err}");
}

#[test]
fn handshake_rejects_an_ablation_mode_mismatch() {
    let (listener, addr) = bound_listener();
    let cfg = test_config(50, 1);
    let alice_opts = NetOptions {
        ablate_beta: true,
        transcript: None,
    };
    let alice = thread::spawn(move || serve_alice_on(listener, &cfg, &alice_opts));

    let bob_cfg = test_config(50, 1);
    assert!(serve_bob(&bob_cfg, addr, &NetOptions::default()).is_err());
    assert!(alice.join().unwrap().is_err());
}

#[test]
fn garbage_frames_fail_fast_without_hanging() {
    let (listener, addr) = bound_listener();
    let cfg = test_config(50, 1);
    let alice = thread::spawn(move || serve_alice_on(listener, &cfg, &NetOptions::default()));

    let start = Instant::now();
    let mut raw = TcpStream::connect(addr).unwrap();
    let payload = br#"{"kind":"Hello","role":"bob""#; // truncated JSON
    raw.write_all(&(payload.len() as u32).to_be_bytes()).unwrap();
    raw.write_all(payload).unwrap();
    raw.flush().unwrap();

    let err = alice.join().unwrap().unwrap_err();
    assert!(matches!(err, CracError::Frame(_)), "{err}");
    assert!(start.elapsed().as_secs() < 5, "must not wait out a timeout");
}

#[test]
fn peer_disconnect_is_a_transport_error() {
    let (listener, addr) = bound_listener();
    let cfg = test_config(50, 1);
    let alice = thread::spawn(move || serve_alice_on(listener, &cfg, &NetOptions::default()));

    drop(TcpStream::connect(addr).unwrap());
    let err = alice.join().unwrap().unwrap_err();
    assert!(matches!(err, CracError::Transport(_)), "{err}");
}

#[test]
fn ablated_wire_run_sends_no_bits_and_decodes_blind() {
    let cfg = test_config(400, 77);
    let (listener, addr) = bound_listener();
    let opts = NetOptions {
        ablate_beta: true,
        transcript: None,
    };
    let alice_opts = opts.clone();
    let alice = thread::spawn(move || serve_alice_on(listener, &cfg, &alice_opts));
    let (_, audit) = serve_bob(&cfg, addr, &opts).unwrap();
    let run = alice.join().unwrap().unwrap();

    assert_eq!(audit.classical_bits_observed, 0);
    assert!(!audit.conforming());
    assert_eq!(run.stats.classical_bits_used, 0);
    // Bob still answered every trial; only the correction bit is missing.
    assert_eq!(run.records.len(), 400);
    assert_eq!(audit.quantum_fabric_messages, 400);
}
