//! Writes the bundled 1,000-record sample corpus.
//!
//! ```text
//! cargo run -p geotopic-core --example make_sample -- data/sample/records.jsonl
//! ```
//!
//! Output is fully determined by the fixed seed below. Composition:
//!
//! | group                                   | lang | geo                        | n   |
//! |-----------------------------------------|------|----------------------------|-----|
//! | Rio, coordinates inside                 | pt   | point                      | 300 |
//! | Rio, neighborhood place                 | pt   | place inside Rio box       | 100 |
//! | São Paulo, coordinates inside           | pt   | point                      | 250 |
//! | São Paulo, neighborhood place           | pt   | place inside SP box        |  50 |
//! | country-wide place                      | pt   | place overlapping both     |  80 |
//! | no location                             | pt   | none                       |  70 |
//! | Rio, coordinates inside                 | en   | point                      |  60 |
//! | Belo Horizonte, coordinates             | pt   | point outside both boxes   |  60 |
//! | São Paulo, neighborhood place           | es   | place inside SP box        |  30 |

use std::env;
use std::fs::File;
use std::io::{BufWriter, Write};

use chrono::{Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SEED: u64 = 20170306;

const THEMES: &[&[&str]] = &[
    &["futebol", "jogo", "jogos", "gol", "gols", "time", "flamengo", "vasco", "corinthians", "palmeiras", "campeonato", "torcida", "estádio", "goleiro", "juiz"],
    &["música", "músicas", "show", "shows", "cantor", "banda", "álbum", "festival", "ingresso", "palco", "samba", "funk", "clipe", "refrão"],
    &["deus", "igreja", "oração", "orações", "senhor", "bênção", "amém", "culto", "missa", "abençoado", "glória", "louvor"],
    &["prova", "provas", "aula", "aulas", "escola", "faculdade", "professor", "professores", "trabalho", "estudar", "matéria", "vestibular"],
    &["comida", "pizza", "almoço", "jantar", "churrasco", "fome", "restaurante", "açaí", "hambúrguer", "lanche", "cerveja", "sorvete"],
    &["trânsito", "ônibus", "metrô", "engarrafamento", "avenida", "motorista", "trem", "linha", "estação", "atraso", "uber"],
    &["governo", "eleição", "presidente", "prefeito", "política", "voto", "votos", "congresso", "deputado", "deputados", "reforma"],
    &["amor", "saudade", "namorado", "namorada", "amigo", "amigos", "amiga", "beijo", "coração", "carinho", "abraço"],
];

const RIO_THEME_WEIGHTS: [u32; 8] = [22, 10, 10, 8, 12, 10, 8, 20];
const SP_THEME_WEIGHTS: [u32; 8] = [18, 12, 8, 16, 10, 14, 10, 12];

const STOPWORDS: &[&str] = &["que", "de", "não", "muito", "com", "pra", "mas", "hoje", "esse", "isso", "uma", "tão"];
const FILLERS: &[&str] = &["kkkkkk", "hahaha", "loooool", "aff", "rsrs", "aaaa", "!!!", "..."];
const ENGLISH: &[&str] = &["game", "tonight", "beach", "amazing", "weekend", "friends", "music", "sunset", "traffic", "lunch"];

/// (sw_lat, sw_lon, ne_lat, ne_lon)
type Corners = (f64, f64, f64, f64);

const RIO: Corners = (-23.08, -43.80, -22.74, -43.10);
const SP: Corners = (-24.01, -46.83, -23.36, -46.36);
const BRAZIL: Corners = (-33.75, -73.99, 5.27, -34.79);
const BELO_HORIZONTE: (f64, f64) = (-19.92, -43.94);

const RIO_PLACES: &[(&str, Corners)] = &[
    ("Copacabana, Rio de Janeiro", (-22.99, -43.20, -22.96, -43.17)),
    ("Tijuca, Rio de Janeiro", (-22.95, -43.27, -22.91, -43.22)),
    ("Barra da Tijuca, Rio de Janeiro", (-23.02, -43.42, -22.99, -43.30)),
    ("Rio de Janeiro, Brasil", (-23.07, -43.79, -22.75, -43.10)),
];
const SP_PLACES: &[(&str, Corners)] = &[
    ("Pinheiros, São Paulo", (-23.58, -46.71, -23.55, -46.67)),
    ("Mooca, São Paulo", (-23.57, -46.61, -23.54, -46.58)),
    ("Vila Mariana, São Paulo", (-23.60, -46.65, -23.57, -46.62)),
];

#[derive(Clone, Copy)]
enum Geo {
    Point(f64, f64),
    Place(&'static str, (f64, f64, f64, f64)),
    None,
}

#[derive(Clone, Copy)]
enum City {
    Rio,
    Sp,
    Elsewhere,
}

struct PostKind {
    lang: &'static str,
    city: City,
    geo: fn(&mut ChaCha8Rng) -> Geo,
    n: usize,
}

fn inside(rng: &mut ChaCha8Rng, b: (f64, f64, f64, f64)) -> Geo {
    // stay a little away from the edges so rounding never crosses them
    let lat = rng.random_range(b.0 + 0.01..b.2 - 0.01);
    let lon = rng.random_range(b.1 + 0.01..b.3 - 0.01);
    Geo::Point((lat * 1e5).round() / 1e5, (lon * 1e5).round() / 1e5)
}

fn words(rng: &mut ChaCha8Rng, theme: &[&str], lo: usize, hi: usize) -> Vec<String> {
    let n = rng.random_range(lo..=hi);
    (0..n).map(|_| theme.choose(rng).unwrap().to_string()).collect()
}

fn theme_for(rng: &mut ChaCha8Rng, city: City) -> usize {
    let weights = match city {
        City::Rio => &RIO_THEME_WEIGHTS,
        City::Sp => &SP_THEME_WEIGHTS,
        City::Elsewhere => &[1; 8],
    };
    let total: u32 = weights.iter().sum();
    let mut pick = rng.random_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if pick < *w {
            return i;
        }
        pick -= w;
    }
    unreachable!()
}

struct Text {
    body: String,
    hashtags: Vec<String>,
    mentions: Vec<String>,
    urls: Vec<String>,
    media: bool,
}

fn compose(rng: &mut ChaCha8Rng, lang: &str, city: City) -> Text {
    let mut parts: Vec<String> = Vec::new();
    let mut hashtags = Vec::new();
    let mut mentions = Vec::new();
    let mut urls = Vec::new();
    let only_noise = rng.random_bool(0.05);
    if !only_noise {
        if lang == "pt" {
            let theme = THEMES[theme_for(rng, city)];
            parts.extend(words(rng, theme, 4, 9));
            parts.extend(words(rng, STOPWORDS, 1, 3));
        } else {
            parts.extend(words(rng, ENGLISH, 4, 8));
        }
    }
    if rng.random_bool(0.3) {
        parts.push(FILLERS.choose(rng).unwrap().to_string());
    }
    if rng.random_bool(0.25) {
        let tag = THEMES.choose(rng).unwrap()[0].to_string();
        parts.push(format!("#{tag}"));
        hashtags.push(tag);
    }
    if only_noise || rng.random_bool(0.3) {
        let user = format!("user{}", rng.random_range(1..500));
        parts.insert(0, format!("@{user}"));
        mentions.push(user);
    }
    if rng.random_bool(0.15) {
        let url = format!("https://t.co/{:08x}", rng.random::<u32>());
        parts.push(url.clone());
        urls.push(url);
    }
    if rng.random_bool(0.1) {
        parts.push(rng.random_range(1..2020).to_string());
    }
    let media = rng.random_bool(0.1);
    // shuffle word order a little, keep the mention in front
    let start = usize::from(!mentions.is_empty());
    if parts.len() > start + 1 {
        let i = rng.random_range(start..parts.len());
        let j = rng.random_range(start..parts.len());
        parts.swap(i, j);
    }
    let mut body = parts.join(" ");
    if rng.random_bool(0.2) {
        body = body.to_uppercase();
    }
    Text { body, hashtags, mentions, urls, media }
}

fn corners(b: (f64, f64, f64, f64)) -> Value {
    let (s, w, n, e) = b;
    json!([[[w, s], [e, s], [e, n], [w, n]]])
}

fn main() {
    let out = env::args().nth(1).unwrap_or_else(|| "data/sample/records.jsonl".into());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let kinds = [
        PostKind { lang: "pt", city: City::Rio, geo: |r| inside(r, RIO), n: 300 },
        PostKind { lang: "pt", city: City::Rio, geo: |r| { let p = RIO_PLACES.choose(r).unwrap(); Geo::Place(p.0, p.1) }, n: 100 },
        PostKind { lang: "pt", city: City::Sp, geo: |r| inside(r, SP), n: 250 },
        PostKind { lang: "pt", city: City::Sp, geo: |r| { let p = SP_PLACES.choose(r).unwrap(); Geo::Place(p.0, p.1) }, n: 50 },
        PostKind { lang: "pt", city: City::Elsewhere, geo: |_| Geo::Place("Brasil", BRAZIL), n: 80 },
        PostKind { lang: "pt", city: City::Elsewhere, geo: |_| Geo::None, n: 70 },
        PostKind { lang: "en", city: City::Rio, geo: |r| inside(r, RIO), n: 60 },
        PostKind { lang: "pt", city: City::Elsewhere, geo: |r| {
            let (lat, lon) = BELO_HORIZONTE;
            inside(r, (lat - 0.1, lon - 0.1, lat + 0.1, lon + 0.1))
        }, n: 60 },
        PostKind { lang: "es", city: City::Sp, geo: |r| { let p = SP_PLACES.choose(r).unwrap(); Geo::Place(p.0, p.1) }, n: 30 },
    ];

    let mut plan: Vec<usize> = kinds.iter().enumerate().flat_map(|(i, s)| std::iter::repeat_n(i, s.n)).collect();
    for i in (1..plan.len()).rev() {
        let j = rng.random_range(0..=i);
        plan.swap(i, j);
    }

    // four weeks starting on a Monday, evening-heavy
    let start = Utc.with_ymd_and_hms(2017, 3, 6, 3, 0, 0).unwrap();
    let mut lines = Vec::with_capacity(plan.len());
    for (n, &which) in plan.iter().enumerate() {
        let kind = &kinds[which];
        let day = rng.random_range(0..28);
        let hour = if rng.random_bool(0.6) { rng.random_range(16..24) } else { rng.random_range(0..24) };
        let created = start + Duration::days(day) + Duration::hours(hour) + Duration::seconds(rng.random_range(0..3600));
        // a few heavy users and a long tail
        let u: f64 = rng.random();
        let user = 1 + (u.powi(3) * 300.0) as u32;
        let text = compose(&mut rng, kind.lang, kind.city);

        let mut rec = json!({
            "id_str": format!("{}", 840000000000000000u64 + n as u64),
            "created_at": created.format("%a %b %d %H:%M:%S +0000 %Y").to_string(),
            "text": text.body,
            "lang": kind.lang,
            "user": { "id_str": format!("{}", 1000 + user) },
            "coordinates": Value::Null,
            "place": Value::Null,
            "entities": {
                "hashtags": text.hashtags.iter().map(|t| json!({ "text": t })).collect::<Vec<_>>(),
                "user_mentions": text.mentions.iter().map(|m| json!({ "screen_name": m })).collect::<Vec<_>>(),
                "urls": text.urls.iter().map(|u| json!({ "url": u })).collect::<Vec<_>>(),
            },
        });
        if text.media {
            rec["entities"]["media"] = json!([{ "type": "photo" }]);
        }
        match (kind.geo)(&mut rng) {
            Geo::Point(lat, lon) => rec["coordinates"] = json!({ "type": "Point", "coordinates": [lon, lat] }),
            Geo::Place(name, b) => {
                rec["place"] = json!({ "full_name": name, "bounding_box": { "type": "Polygon", "coordinates": corners(b) } })
            }
            Geo::None => {}
        }
        lines.push(rec.to_string());
    }

    let mut w = BufWriter::new(File::create(&out).expect("create output"));
    for l in lines {
        writeln!(w, "{l}").expect("write record");
    }
    w.flush().expect("flush output");
}
