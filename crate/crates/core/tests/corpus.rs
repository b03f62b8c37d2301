//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::PathBuf;

use fundom::scene::Scene;
use fundom::voronoi::Net;
use fundom::SpaceModel;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "{} is empty", dir.display());
    files.into_iter().map(|f| fs::read(f).unwrap()).collect()
}

#[test]
fn scene_seeds_parse_or_fail_cleanly() {
    let mut parsed = 0;
    for data in corpus("scene_parse") {
        if let Ok(scene) = Scene::parse(&String::from_utf8_lossy(&data)) {
            parsed += 1;
            let text = serde_json::to_string(&scene).unwrap();
            assert_eq!(Scene::parse(&text).unwrap(), scene);
            scene.action().unwrap();
        }
    }
    assert!(parsed >= 7);
}

#[test]
fn net_seeds_round_trip() {
    for data in corpus("net_parse") {
        let space = if data[0] % 3 == 1 { SpaceModel::PoincareDisk } else { SpaceModel::plane() };
        let net = Net::from_json(&space, std::str::from_utf8(&data[1..]).unwrap()).unwrap();
        let again = Net::from_json(&space, &net.to_json(&space)).unwrap();
        assert_eq!(again.len(), net.len());
    }
}
