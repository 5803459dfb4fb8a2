use std::io::Write;
use std::path::{Path, PathBuf};

use mirage_core::engine::{Event, EventBody, Phase, ScoreRecord, SYSTEM_ACTOR};
use mirage_core::harness::{
    canonical_bytes, parse_transcript, replay, replay_events, run, run_all, run_batch_sequential,
    PreparedRun, ReplayError, RunConfig, TranscriptError,
};
use mirage_core::memory::UsageCounters;
use mirage_core::script::load_script;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn config(name: &str, out: &Path) -> RunConfig {
    let mut config = RunConfig::load(fixtures().join(name)).unwrap();
    config.output_dir = out.to_path_buf();
    config
}

#[test]
fn run_writes_transcript_and_report_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(config("demo.toml", &dir.path().join("a"))).unwrap();
    let b = run(config("demo.toml", &dir.path().join("b"))).unwrap();
    assert_eq!(a.hash, b.hash);
    assert_eq!(std::fs::read(&a.transcript_path).unwrap(), std::fs::read(&b.transcript_path).unwrap());
    assert_eq!(a.report, b.report);
    assert!(a.transcript_path.ends_with("mini_manor-seed42/transcript.jsonl"));

    let events = mirage_core::harness::read_transcript(&a.transcript_path).unwrap();
    let speaks = events
        .iter()
        .filter(|e| e.phase == Phase::OpenConversation && matches!(e.body, EventBody::Speak { .. }))
        .count();
    assert_eq!(speaks, 15);
    assert_eq!(events.iter().filter(|e| matches!(e.body, EventBody::Vote { .. })).count(), 3);
}

#[test]
fn judged_scores_are_recorded_for_every_character() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run(config("demo.toml", dir.path())).unwrap();
    for c in &bundle.report.characters {
        assert!(c.abilities.is_some(), "{} has no ability scores", c.character);
        assert!(c.ici.is_some() && c.sci.is_some());
    }
}

#[test]
fn seeds_change_random_games() {
    let dir = tempfile::tempdir().unwrap();
    let prepared = PreparedRun::new(config("random.toml", dir.path())).unwrap();
    assert_ne!(prepared.play(1).unwrap().hash, prepared.play(2).unwrap().hash);
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let dir = tempfile::tempdir().unwrap();
    let prepared = PreparedRun::new(config("random.toml", dir.path())).unwrap();
    let seeds = prepared.seeds();
    let seq: Vec<String> = run_batch_sequential(&prepared, &seeds)
        .into_iter()
        .map(|o| o.unwrap().hash)
        .collect();
    let par: Vec<String> = mirage_core::harness::run_batch(&prepared, &seeds)
        .into_iter()
        .map(|o| o.unwrap().hash)
        .collect();
    assert_eq!(seq, par);
}

#[test]
fn run_all_writes_one_directory_per_seed_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let batch = run_all(config("random.toml", dir.path())).unwrap();
    assert_eq!(batch.bundles.len(), 8);
    assert_eq!(batch.row.games, 8);
    let table = std::fs::read_to_string(&batch.table_path).unwrap();
    assert!(table.contains("random agents"));
}

#[test]
fn replay_matches_for_chinese_script() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run(config("lantern.toml", dir.path())).unwrap();
    let replayed = replay(&bundle.transcript_path, fixtures().join("lantern_bridge.json")).unwrap();
    assert_eq!(replayed, bundle.report);
}

#[test]
fn truncated_transcript_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run(config("demo.toml", dir.path())).unwrap();
    let text = std::fs::read_to_string(&bundle.transcript_path).unwrap();
    let cut = &text[..text.len() / 2];
    let path = dir.path().join("cut.jsonl");
    std::fs::write(&path, cut).unwrap();
    match replay(&path, fixtures().join("mini_manor.json")) {
        Err(ReplayError::Transcript(TranscriptError::Corrupt { .. })) => {}
        other => panic!("unexpected {other:?}"),
    }
}

fn event(seq: u64, actor: &str, body: EventBody) -> Event {
    Event {
        seq,
        round: 0,
        phase: Phase::Interaction,
        actor: actor.into(),
        body,
        usage: UsageCounters::default(),
    }
}

fn clue(seq: u64) -> Event {
    event(
        seq,
        "Doctor Reed",
        EventBody::ClueRevealed {
            clue_id: "c_brandy".into(),
            location: "Study".into(),
            text: "x".into(),
            is_key: true,
        },
    )
}

#[test]
fn replay_rejects_inconsistent_events() {
    let script = load_script(fixtures().join("mini_manor.json")).unwrap();
    let twice = vec![clue(0), clue(1)];
    assert!(matches!(replay_events(&script, &twice), Err(ReplayError::Corrupt { seq: 1, .. })));

    let gap = vec![clue(0), event(2, SYSTEM_ACTOR, EventBody::Speak { text: String::new() })];
    assert!(matches!(replay_events(&script, &gap), Err(ReplayError::Corrupt { seq: 2, .. })));

    let stranger = vec![event(0, "Inspector", EventBody::Speak { text: "hi".into() })];
    assert!(matches!(replay_events(&script, &stranger), Err(ReplayError::Corrupt { seq: 0, .. })));
}

#[test]
fn duplicated_seq_line_is_corrupt() {
    let first = event(0, "Doctor Reed", EventBody::Speak { text: "a".into() });
    let mut bytes = canonical_bytes(std::slice::from_ref(&first));
    bytes.extend(canonical_bytes(&[first]));
    assert!(matches!(
        parse_transcript(bytes.as_slice()),
        Err(TranscriptError::Corrupt { line: 2, .. })
    ));
}

#[test]
fn lone_suspicion_score_replays_to_extreme_indices() {
    let script = load_script(fixtures().join("mini_manor.json")).unwrap();
    let events = vec![
        event(0, SYSTEM_ACTOR, EventBody::Speak { text: String::new() }),
        event(
            1,
            "Butler Graves",
            EventBody::Score(ScoreRecord::Ledger {
                observer: "Butler Graves".into(),
                subject: "Madam Hong".into(),
                suspicion: 2,
                trust: 0,
            }),
        ),
    ];
    let report = replay_events(&script, &events).unwrap();
    let hong = report.characters.iter().find(|c| c.character == "Madam Hong").unwrap();
    assert_eq!(hong.accumulated_suspicion, 2);
    assert_eq!(hong.tii, Some(0.0));
    assert_eq!(hong.fii, Some(1.0));
    let reed = report.characters.iter().find(|c| c.character == "Doctor Reed").unwrap();
    assert_eq!((reed.tii, reed.fii), (None, None));
    assert!(report.game.winner.is_none());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "script = \"x.json\"\nseed = 1\nroundz = 3").unwrap();
    assert!(RunConfig::load(&path).is_err());
}

/// Answers every request with 401.
fn unauthorized_server() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut buf = [0u8; 65536];
            let _ = std::io::Read::read(&mut stream, &mut buf);
            let body = r#"{"error":"invalid api key"}"#;
            let _ = write!(
                stream,
                "HTTP/1.1 401 Unauthorized\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    format!("http://{addr}/v1")
}

#[test]
fn bad_credentials_name_the_character() {
    use mirage_core::agent::BackendError;
    use mirage_core::engine::EngineError;
    use mirage_core::harness::{BackendSpec, HarnessError};

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("demo.toml", dir.path());
    cfg.characters.insert(
        "Doctor Reed".into(),
        BackendSpec::Remote {
            endpoint: Some(unauthorized_server()),
            model: "m".into(),
            temperature: None,
            top_p: None,
            timeout_secs: Some(5),
        },
    );
    match run(cfg) {
        Err(HarnessError::Engine {
            seq,
            source: EngineError::Backend { character, source: BackendError::Auth(_) },
        }) => {
            assert_eq!(character, "Doctor Reed");
            assert_eq!(seq, 2, "fails on Reed's introduction");
        }
        other => panic!("unexpected {other:?}"),
    }
}
