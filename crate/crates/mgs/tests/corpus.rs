//! Every scene under scenes/ against its expected verdict.

use mgs::integrability::{decide, Status};
use mgs::lie_catalog::{entry, representative_ids, RuleKind};
use mgs::structures::Scene;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

#[derive(Deserialize)]
struct Expect {
    status: String,
    failed: Option<String>,
}

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn load(name: &str) -> Scene {
    let text = std::fs::read_to_string(dir().join(format!("{name}.scene"))).unwrap();
    Scene::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn expected() -> BTreeMap<String, Expect> {
    toml::from_str(&std::fs::read_to_string(dir().join("expected.toml")).unwrap()).unwrap()
}

#[test]
fn verdicts_match() {
    let mut bad = Vec::new();
    for (name, exp) in expected() {
        let scene = load(&name);
        let ms = scene.build().unwrap();
        let v = match decide(&ms, scene.tol()) {
            Ok(v) => v,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        let status = format!("{:?}", v.status);
        if status != exp.status {
            bad.push(format!("{name}: {status}, expected {} ({:?})", exp.status, v.conditions));
            continue;
        }
        match &exp.failed {
            Some(f) if !v.failed().any(|c| &c.name == f) => {
                bad.push(format!("{name}: '{f}' did not fail ({:?})", v.failed().map(|c| &c.name).collect::<Vec<_>>()))
            }
            // flat fixtures pass every condition they evaluate
            None if v.conditions.iter().any(|c| !c.pass) => bad.push(format!("{name}: a condition failed")),
            _ => {}
        }
        // the cap: only iff rules may say Integrable
        let kind = entry(&ms.id).unwrap().rule.kind;
        if v.status == Status::Integrable {
            assert!(matches!(kind, RuleKind::Iff | RuleKind::Always), "{name}");
        }
        if v.status == Status::NotIntegrable {
            assert!(v.failed().all(|c| c.residual > c.tol), "{name}");
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn every_group_has_a_flat_fixture() {
    let groups: BTreeSet<String> = expected()
        .iter()
        .filter(|(_, e)| e.failed.is_none())
        .map(|(n, _)| load(n).build().unwrap().id.to_string())
        .collect();
    for id in representative_ids() {
        assert!(groups.contains(&id.to_string()), "no flat fixture for {id}");
    }
}

#[test]
fn scenes_round_trip() {
    for name in expected().keys() {
        let scene = load(name);
        let again = Scene::from_toml(&scene.to_toml()).unwrap();
        assert_eq!(again, scene, "{name}");
        let ms = scene.build().unwrap();
        let back = Scene::from_structure(&ms, scene.options.clone());
        assert_eq!(back.build().unwrap(), ms, "{name}");
    }
}
