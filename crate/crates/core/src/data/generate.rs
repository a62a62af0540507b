//! Deterministic synthetic Turkish address queries.
//!
//! Each query is assembled from optional components in the usual Turkish
//! order (POI, neighbourhood, village, avenue, street, site, building, block,
//! floor, door, district, city, postcode, country). Component probabilities
//! are tuned so POI tokens dominate and door numbers are the rarest entity,
//! mirroring the label imbalance of real map queries. Surface forms get
//! random casing and occasional ASCII folding before being normalized.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{AddressSample, TagId, TagSchema};
use crate::error::{Error, Result};
use crate::turkish_text::{turkish_lowercase, turkish_uppercase};

const CITIES: &[&str] = &[
    "istanbul", "ankara", "izmir", "bursa", "antalya", "konya", "adana", "eskişehir",
    "gaziantep", "kayseri", "mersin", "trabzon", "samsun", "diyarbakır", "muğla",
    "aydın", "denizli", "sakarya", "kocaeli", "tekirdağ", "edirne", "çanakkale",
    "balıkesir", "manisa", "malatya", "erzurum", "van", "şanlıurfa", "hatay", "ısparta",
];

const DISTRICTS: &[&str] = &[
    "kadıköy", "beşiktaş", "üsküdar", "şişli", "fatih", "bakırköy", "maltepe",
    "ataşehir", "sarıyer", "beyoğlu", "çankaya", "keçiören", "yenimahalle", "etimesgut",
    "konak", "karşıyaka", "bornova", "buca", "nilüfer", "osmangazi", "muratpaşa",
    "konyaaltı", "selçuklu", "meram", "seyhan", "çukurova", "tepebaşı", "odunpazarı",
    "ortahisar", "atakum", "bodrum", "marmaris", "fethiye", "alanya", "kemer",
];

const TWO_WORD_DISTRICTS: &[&str] = &["yeni mahalle", "merkez efendi", "kartal merkez"];

const NEIGHBORHOOD_NAMES: &[&str] = &[
    "caferağa", "moda", "fenerbahçe", "göztepe", "erenköy", "suadiye", "bostancı",
    "levent", "etiler", "bebek", "arnavutköy", "cihangir", "kızılay", "bahçelievler",
    "alsancak", "göztepe", "çamlık", "yıldız", "esentepe", "fikirtepe", "acıbadem",
    "koşuyolu", "altıntepe", "cumhuriyet", "fevzi çakmak", "zafer", "atatürk", "barbaros",
];

const NEIGHBORHOOD_SUFFIX: &[&str] = &["mahallesi", "mah", "mh"];

const VILLAGE_NAMES: &[&str] = &[
    "yeşilköy", "kuzuköy", "akçaköy", "karaağaç", "dereköy", "çamlıca", "ortaköy",
    "sarıbeyler", "gökçeören", "yeniceköy",
];

const AVENUE_NAMES: &[&str] = &[
    "bağdat", "istiklal", "atatürk", "cumhuriyet", "barbaros", "inönü", "halaskargazi",
    "büyükdere", "fevzi paşa", "millet", "vatan", "gazi mustafa kemal", "kennedy",
    "tunalı hilmi", "kazım karabekir", "mithatpaşa",
];

const AVENUE_SUFFIX: &[&str] = &["caddesi", "cad", "cd", "bulvarı", "blv"];

const STREET_NAMES: &[&str] = &[
    "gül", "lale", "menekşe", "papatya", "çınar", "ıhlamur", "akasya", "nane",
    "zambak", "karanfil", "şair nedim", "dr esat", "kırkpınar", "bahar", "güneş",
];

const STREET_SUFFIX: &[&str] = &["sokak", "sokağı", "sk", "sok"];

const SITE_NAMES: &[&str] = &[
    "yeşil vadi", "mavi göl", "park", "bahçeşehir", "göl kent", "sahil", "koru", "zümrüt",
];

const SITE_SUFFIX: &[&str] = &["sitesi", "evleri", "konutları"];

const BUILDING_NAMES: &[&str] = &[
    "güneş", "kaya", "yıldız", "deniz", "umut", "huzur", "barış", "ufuk", "doğa", "nur",
];

const BUILDING_SUFFIX: &[&str] = &["apartmanı", "apt", "plaza", "iş merkezi", "han"];

const POIS: &[&str] = &[
    "migros", "bim", "a101", "şok market", "carrefoursa", "starbucks", "starbucks kahve",
    "nike store", "ayasofya", "hagia sofia", "galata kulesi", "kız kulesi", "anıtkabir",
    "kapalı çarşı", "mısır çarşısı", "forum istanbul", "cevahir avm", "zorlu center",
    "kanyon avm", "optimum outlet", "acıbadem hastanesi", "devlet hastanesi",
    "şehir hastanesi", "koç üniversitesi", "boğaziçi üniversitesi", "ege üniversitesi",
    "taksim meydanı", "kızılay meydanı", "shell", "opet", "petrol ofisi", "mado",
    "simit sarayı", "mcdonalds", "burger king", "ziraat bankası", "iş bankası",
    "vakıfbank atm", "belediye binası", "otogar", "sabiha gökçen havalimanı",
    "esenboğa havalimanı", "metro istasyonu", "tren garı", "eczane", "ptt", "postane",
    "vergi dairesi", "nüfus müdürlüğü", "adliye", "stadyum", "spor salonu", "kütüphane",
    "sinema", "hamam", "cami", "lise", "ilkokul", "kreş", "veteriner", "kuaför",
    "oto yıkama", "fırın", "pastane", "kasap", "manav", "kafe", "otel", "pansiyon",
    "hilton otel", "divan otel", "teknosa", "mediamarkt", "ikea", "koçtaş", "decathlon",
];

const COUNTRIES: &[&str] = &["türkiye", "turkey", "tr", "türkiye cumhuriyeti"];

const FILLER_BEFORE: &[&str] = &["en yakın", "yakınımdaki", "bana yakın", "nerede"];
const FILLER_AFTER: &[&str] = &["yakını", "karşısı", "arkası", "önü", "nerede"];

const BLOCK_LETTERS: &[&str] = &["a", "b", "c", "d", "a1", "b2", "c3", "e"];

/// Typed token that will be emitted with an entity label (or `O`).
struct Span {
    words: Vec<String>,
    entity: Option<&'static str>,
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn entity(text: impl AsRef<str>, name: &'static str) -> Span {
    Span {
        words: words(text.as_ref()),
        entity: Some(name),
    }
}

fn outside(text: &str) -> Span {
    Span {
        words: words(text),
        entity: None,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &[&'a str]) -> &'a str {
    list.choose(rng).expect("gazetteers are non-empty")
}

fn compose(rng: &mut ChaCha8Rng, names: &[&str], suffixes: &[&str]) -> String {
    format!("{} {}", pick(rng, names), pick(rng, suffixes))
}

fn ascii_fold(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'ı' => 'i',
            'ş' => 's',
            'ğ' => 'g',
            'ü' => 'u',
            'ö' => 'o',
            'ç' => 'c',
            other => other,
        })
        .collect()
}

/// Casing style chosen once per query, plus rare per-word ASCII folding.
fn surface(rng: &mut ChaCha8Rng, word: &str, style: u8) -> String {
    let word = if rng.gen_bool(0.06) {
        ascii_fold(word)
    } else {
        word.to_string()
    };
    match style {
        0 => word,
        1 => {
            let mut chars = word.chars();
            match chars.next() {
                Some(first) => turkish_uppercase(&first.to_string()) + chars.as_str(),
                None => word,
            }
        }
        _ => turkish_uppercase(&word),
    }
}

fn build_query(rng: &mut ChaCha8Rng) -> Vec<Span> {
    let mut spans = Vec::new();
    let poi_first = rng.gen_bool(0.7);
    let has_poi = rng.gen_bool(0.8);

    let mut poi_block = Vec::new();
    if has_poi {
        if rng.gen_bool(0.12) {
            poi_block.push(outside(pick(rng, FILLER_BEFORE)));
        }
        poi_block.push(entity(pick(rng, POIS), "POI"));
        if rng.gen_bool(0.15) {
            poi_block.push(entity(pick(rng, POIS), "POI"));
        }
        if rng.gen_bool(0.1) {
            poi_block.push(outside(pick(rng, FILLER_AFTER)));
        }
    }
    if poi_first {
        spans.append(&mut poi_block);
    }

    if rng.gen_bool(0.3) {
        spans.push(entity(compose(rng, NEIGHBORHOOD_NAMES, NEIGHBORHOOD_SUFFIX), "NEIGHBORHOOD"));
    }
    if rng.gen_bool(0.07) {
        spans.push(entity(format!("{} köyü", pick(rng, VILLAGE_NAMES)), "VILLAGE"));
    }
    if rng.gen_bool(0.25) {
        spans.push(entity(compose(rng, AVENUE_NAMES, AVENUE_SUFFIX), "AVENUE"));
    }
    if rng.gen_bool(0.22) {
        let name = if rng.gen_bool(0.3) {
            rng.gen_range(1000..2000).to_string()
        } else {
            pick(rng, STREET_NAMES).to_string()
        };
        spans.push(entity(format!("{name} {}", pick(rng, STREET_SUFFIX)), "STREET"));
    }
    if rng.gen_bool(0.09) {
        spans.push(entity(compose(rng, SITE_NAMES, SITE_SUFFIX), "SITE"));
    }
    if rng.gen_bool(0.1) {
        spans.push(entity(compose(rng, BUILDING_NAMES, BUILDING_SUFFIX), "BUILDING"));
    }
    if rng.gen_bool(0.06) {
        spans.push(entity(pick(rng, BLOCK_LETTERS), "BLOCK"));
        spans.push(outside("blok"));
    }
    if rng.gen_bool(0.06) {
        spans.push(outside(if rng.gen_bool(0.5) { "kat" } else { "k" }));
        spans.push(entity(rng.gen_range(1..=20).to_string(), "FLOOR"));
    }
    if rng.gen_bool(0.035) {
        spans.push(outside(pick(rng, &["no", "daire", "d"])));
        spans.push(entity(rng.gen_range(1..=150).to_string(), "DOOR"));
    }
    if rng.gen_bool(0.45) {
        let district = if rng.gen_bool(0.08) {
            pick(rng, TWO_WORD_DISTRICTS)
        } else {
            pick(rng, DISTRICTS)
        };
        spans.push(entity(district, "DISTRICT"));
    }
    if rng.gen_bool(0.45) {
        spans.push(entity(pick(rng, CITIES), "CITY"));
    }
    if rng.gen_bool(0.05) {
        spans.push(entity(format!("{}{:03}", rng.gen_range(1..=81), rng.gen_range(0..1000)), "POSTCODE"));
    }
    if rng.gen_bool(0.07) {
        spans.push(entity(pick(rng, COUNTRIES), "COUNTRY"));
    }

    if !poi_first {
        spans.append(&mut poi_block);
    }
    if spans.is_empty() {
        spans.push(entity(pick(rng, POIS), "POI"));
    }
    spans
}

/// Labels for a span of `len` tokens of entity `name` under `schema`.
///
/// Types missing from the schema become `O`; continuation tokens of a
/// single-token-only type become `O` as well.
fn label_span(schema: &TagSchema, name: Option<&str>, len: usize) -> Vec<TagId> {
    let Some(e) = name.and_then(|n| schema.entity_index(n)) else {
        return vec![TagId::OUTSIDE; len];
    };
    let mut tags = Vec::with_capacity(len);
    tags.push(schema.begin(e));
    let rest = schema.inside(e).unwrap_or(TagId::OUTSIDE);
    tags.extend(std::iter::repeat(rest).take(len - 1));
    tags
}

/// Generate `size` IOB-valid samples, fully determined by `(seed, size)`.
pub fn generate_dataset(seed: u64, size: usize, schema: &TagSchema) -> Result<Vec<AddressSample>> {
    if size < 1 {
        return Err(Error::InvalidSize(size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(size);
    for _ in 0..size {
        let style = match rng.gen_range(0..10) {
            0..=5 => 0,
            6..=8 => 1,
            _ => 2,
        };
        let mut tokens = Vec::new();
        let mut tags = Vec::new();
        for span in build_query(&mut rng) {
            tags.extend(label_span(schema, span.entity, span.words.len()));
            for w in &span.words {
                tokens.push(turkish_lowercase(&surface(&mut rng, w, style)));
            }
        }
        samples.push(AddressSample::new(tokens, tags, schema)?);
    }
    Ok(samples)
}
