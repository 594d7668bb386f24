use std::io::Cursor;

use geotopic::ingest::{parse_post, scan_corpus, IngestReport};
use proptest::prelude::*;
use serde_json::json;

#[derive(Debug, Clone)]
struct PostKind {
    lang: &'static str,
    point: Option<(f64, f64)>,
    place: Option<(f64, f64, f64, f64)>,
}

fn kind() -> impl Strategy<Value = PostKind> {
    let lat = -89.0..89.0f64;
    let lon = -179.0..179.0f64;
    (
        prop::sample::select(vec!["pt", "en", "es", "und"]),
        prop::option::of((lat.clone(), lon.clone())),
        prop::option::of((lat, lon, 0.0..1.0f64, 0.0..1.0f64)),
    )
        .prop_map(|(lang, point, place)| PostKind { lang, point, place })
}

fn line(i: usize, s: &PostKind) -> String {
    let coordinates = s.point.map(|(lat, lon)| json!({"type": "Point", "coordinates": [lon, lat]}));
    let place = s.place.map(|(lat, lon, h, w)| {
        json!({"bounding_box": {"type": "Polygon", "coordinates": [[
            [lon, lat], [lon + w, lat], [lon + w, lat + h], [lon, lat + h]
        ]]}})
    });
    json!({
        "id_str": format!("{}", 1000 + i),
        "text": "texto qualquer",
        "created_at": "Wed Mar 01 12:00:00 +0000 2017",
        "lang": s.lang,
        "user": {"id_str": "7"},
        "coordinates": coordinates,
        "place": place,
    })
    .to_string()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_never_panics(s in "\\PC{0,200}") {
        let _ = parse_post(&s);
    }

    #[test]
    fn parse_never_panics_on_json_shapes(v in any::<Option<i64>>(), t in "\\PC{0,30}", n in -500.0..500.0f64) {
        for candidate in [
            json!({"id_str": t, "text": v, "created_at": t, "lang": "pt", "user": {"id_str": t}}),
            json!({"id_str": "1", "text": "x", "created_at": t, "lang": "pt", "user": {"id_str": "2"},
                   "coordinates": {"coordinates": [n, n, n]}}),
            json!({"id_str": "1", "text": "x", "created_at": "Wed Mar 01 12:00:00 +0000 2017", "lang": "pt",
                   "user": {"id_str": "2"}, "place": {"bounding_box": {"coordinates": [[[n, -n], [n]]]}}}),
            json!([t, v, n]),
        ] {
            let _ = parse_post(&candidate.to_string());
        }
    }

    #[test]
    fn scan_totals_match_a_direct_count(kinds in prop::collection::vec(kind(), 0..200), junk in 0usize..20) {
        let mut text = String::new();
        for (i, s) in kinds.iter().enumerate() {
            text.push_str(&line(i, s));
            text.push('\n');
        }
        for j in 0..junk {
            text.push_str(&format!("{{broken {j}\n"));
        }
        let report = scan_corpus(&mut Cursor::new(text)).unwrap();
        prop_assert_eq!(report.total, kinds.len() as u64);
        prop_assert_eq!(report.malformed, junk as u64);
        prop_assert_eq!(report.with_point, kinds.iter().filter(|s| s.point.is_some()).count() as u64);
        prop_assert_eq!(
            report.with_place_only,
            kinds.iter().filter(|s| s.point.is_none() && s.place.is_some()).count() as u64
        );
        prop_assert_eq!(report.with_point + report.with_place_only + report.with_neither, report.total);
        prop_assert_eq!(report.by_lang.values().sum::<u64>(), report.total);
        for lang in ["pt", "en", "es", "und"] {
            let want = kinds.iter().filter(|s| s.lang == lang).count() as u64;
            prop_assert_eq!(report.by_lang.get(lang).copied().unwrap_or(0), want);
        }
    }

    #[test]
    fn parsed_fields_roundtrip(s in kind()) {
        let post = parse_post(&line(3, &s)).unwrap();
        prop_assert_eq!(post.lang.as_str(), s.lang);
        prop_assert_eq!(post.point.map(|p| (p.lat, p.lon)), s.point);
        if let Some((lat, lon, h, w)) = s.place {
            let b = post.place_box.unwrap();
            prop_assert_eq!((b.sw().lat, b.sw().lon), (lat, lon));
            prop_assert_eq!((b.ne().lat, b.ne().lon), (lat + h, lon + w));
        } else {
            prop_assert!(post.place_box.is_none());
        }
    }

    #[test]
    fn merge_is_order_independent(kinds in prop::collection::vec(kind(), 0..60), split in 0usize..60) {
        let lines: Vec<String> = kinds.iter().enumerate().map(|(i, s)| line(i, s)).collect();
        let split = split.min(lines.len());
        let fold = |ls: &[String]| {
            let mut r = IngestReport::default();
            ls.iter().for_each(|l| r.record_line(l));
            r
        };
        let whole = fold(&lines);
        prop_assert_eq!(fold(&lines[..split]).merge(fold(&lines[split..])), whole.clone());
        prop_assert_eq!(fold(&lines[split..]).merge(fold(&lines[..split])), whole);
    }
}
