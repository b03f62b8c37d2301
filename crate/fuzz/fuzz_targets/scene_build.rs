#![no_main]

use fundom::scene::Scene;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(scene) = Scene::parse(data) else { return };
    if let Ok(space) = scene.space() {
        let _ = scene.window(&space);
    }
    let _ = scene.action();
});
