#![no_main]

use fundom::geometry::{Edge, MetricGraph};
use fundom::voronoi::Net;
use fundom::SpaceModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&selector, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let space = match selector % 3 {
        0 => SpaceModel::plane(),
        1 => SpaceModel::PoincareDisk,
        _ => {
            let edges = vec![Edge { a: 0, b: 1, length: 1.0 }, Edge { a: 1, b: 2, length: 2.0 }];
            SpaceModel::MetricGraph(MetricGraph::new(3, edges).expect("valid graph"))
        }
    };
    if let Ok(net) = Net::from_json(&space, text) {
        // A net that parsed must survive a round trip.
        let again = Net::from_json(&space, &net.to_json(&space)).expect("round trip");
        assert_eq!(again.len(), net.len());
    }
});
