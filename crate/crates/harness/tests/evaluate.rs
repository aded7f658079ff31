use ibrl_harness::config::AgentKind;
use ibrl_harness::stats::mean;
use ibrl_harness::{evaluate, AgentResources, ExperimentConfig, evaluate_with};

const SMALL_CHAIN: &str = r#"
[environment]
name = "chain"

[agents]
list = ["ibrl", "ibrl-discrete", "bpvi", "exploit", "oracle", "meta"]

[planner]
horizon = 15
particles = 40
beliefs = 6
depth = 5
rollouts = 100

[protocol]
opponents = 3
episodes = 2
steps = 25

[seeds]
master = 5
"#;

fn small_chain() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL_CHAIN).unwrap()
}

#[test]
fn one_opponent_one_episode() {
    let mut config = small_chain();
    config.protocol.opponents = 1;
    config.protocol.episodes = 1;
    let result = evaluate(&config).unwrap();
    assert_eq!(result.rows.len(), config.agents.len());
    for s in &result.summaries {
        assert_eq!(s.episodes, 1);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.failed, 0);
    }
    // a single opponent leaves nothing to test
    assert!(result.compare().iter().all(|c| c.test.is_none()));
}

#[test]
fn summaries_are_the_row_averages() {
    let config = small_chain();
    let result = evaluate(&config).unwrap();
    assert_eq!(result.rows.len(), 6 * 3 * 2);
    for s in &result.summaries {
        let totals: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.agent_index == s.agent_index)
            .map(|r| r.total_reward)
            .collect();
        assert_eq!(totals.len(), 6);
        assert!((s.mean - mean(&totals)).abs() < 1e-12);
        assert!((mean(&s.opponent_means) - s.mean).abs() < 1e-12);
    }
    let text = result.summary_text();
    for kind in &config.agents {
        assert!(text.contains(kind.name()));
    }
}

#[test]
fn listing_an_agent_twice_gives_identical_rows() {
    let mut config = small_chain();
    config.agents = vec![AgentKind::Bpvi, AgentKind::Bpvi];
    let result = evaluate(&config).unwrap();
    let (a, b): (Vec<_>, Vec<_>) = result.rows.iter().partition(|r| r.agent_index == 0);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.opponent, x.episode, x.seed), (y.opponent, y.episode, y.seed));
        assert_eq!(x.total_reward, y.total_reward);
        assert_eq!(x.discounted_return, y.discounted_return);
    }
}

#[test]
fn outputs_do_not_depend_on_the_thread_count() {
    let config = small_chain();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let res = AgentResources::prepare(&config).unwrap();
            let e = evaluate_with(&config, &res).unwrap();
            (e.results_csv().unwrap(), e.compare_csv().unwrap())
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn output_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_chain();
    config.agents = vec![AgentKind::Ibrl, AgentKind::Exploit];
    let result = evaluate(&config).unwrap();
    result.write_outputs(dir.path()).unwrap();
    for file in ["results.csv", "summary.txt", "planning_time.csv", "compare.csv"] {
        assert!(dir.path().join(file).is_file(), "{file}");
    }
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let kinds: Vec<&str> = results.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "episode").count(), 2 * 3 * 2);
    assert_eq!(kinds.iter().filter(|k| **k == "opponent").count(), 2 * 3);
    assert_eq!(kinds.iter().filter(|k| **k == "overall").count(), 2);
    let planning = std::fs::read_to_string(dir.path().join("planning_time.csv")).unwrap();
    assert!(planning.lines().count() > 1);
}

#[test]
fn bad_configs_are_rejected() {
    let err = ExperimentConfig::from_toml(&SMALL_CHAIN.replace("episodes = 2", "episodes = 0")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = ExperimentConfig::from_toml(&SMALL_CHAIN.replace("name = \"chain\"", "name = \"moon\"")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let text = format!("{SMALL_CHAIN}\n[baselines]\nbpvi_posterior = \"magic\"\n");
    assert!(ExperimentConfig::from_toml(&text).is_err());
    let text = format!("{SMALL_CHAIN}\n[baselines]\nbpvi_posterior = \"conjugate\"\n");
    assert!(ExperimentConfig::from_toml(&text).is_ok());
}
