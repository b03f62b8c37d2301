#![no_main]

use fundom::scene::Scene;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // Rejections are fine; panics are not.
    let _ = Scene::parse(data);
});
