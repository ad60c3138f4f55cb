//! Closed vocabulary of the synthetic scene world.

/// (singular, plural, is_container)
pub const NOUNS: &[(&str, &str, bool)] = &[
    ("apple", "apples", false),
    ("backpack", "backpacks", true),
    ("bag", "bags", true),
    ("ball", "balls", false),
    ("banana", "bananas", false),
    ("basket", "baskets", true),
    ("bear", "bears", false),
    ("bicycle", "bicycles", false),
    ("bird", "birds", false),
    ("blanket", "blankets", false),
    ("boat", "boats", false),
    ("bottle", "bottles", false),
    ("bowl", "bowls", true),
    ("box", "boxes", true),
    ("cake", "cakes", false),
    ("car", "cars", false),
    ("cat", "cats", false),
    ("chair", "chairs", false),
    ("clock", "clocks", false),
    ("cup", "cups", false),
    ("dog", "dogs", false),
    ("duck", "ducks", false),
    ("frisbee", "frisbees", false),
    ("goat", "goats", false),
    ("guitar", "guitars", false),
    ("hat", "hats", false),
    ("horse", "horses", false),
    ("kite", "kites", false),
    ("knife", "knives", false),
    ("lamp", "lamps", false),
    ("orange", "oranges", false),
    ("phone", "phones", false),
    ("rabbit", "rabbits", false),
    ("sandwich", "sandwiches", false),
    ("shoe", "shoes", false),
    ("spoon", "spoons", false),
    ("towel", "towels", false),
    ("tray", "trays", true),
    ("truck", "trucks", false),
    ("umbrella", "umbrellas", false),
];

/// Size adjectives in increasing order; every object carries exactly one.
pub const SIZES: &[&str] = &["tiny", "small", "large", "huge"];

pub const COLORS: &[&str] = &[
    "red", "blue", "green", "yellow", "black", "white", "brown", "purple", "pink", "gray", "wooden",
    "shiny", "striped",
];

pub const PREDICATES: &[&str] = &[
    "contains", "on", "under", "near", "behind", "beside", "above", "facing", "touching", "holding",
];

/// (id, earlier form, later form). An event mentioned as the earlier of two
/// (or as a cause) takes its first form, as the later (or an effect) its
/// second. The forms share no content word.
pub const EVENTS: &[(&str, &str, &str)] = &[
    ("rain", "it rained", "rain was pouring down"),
    ("wet_ground", "the soil got soaked", "the ground is wet"),
    ("bell", "the bell rang", "chimes were heard"),
    ("cheer", "the crowd cheered", "applause filled the hall"),
    ("dim", "the lights dimmed", "the room went dark"),
    ("music", "the music started", "a song was playing"),
    ("wind", "the wind blew", "a gust swept through"),
    ("door", "the door slammed", "a bang echoed"),
    ("cry", "the baby cried", "an infant was wailing"),
    ("stall", "the engine stalled", "the motor stopped"),
    ("alarm", "the alarm sounded", "a siren was blaring"),
    ("kettle", "the kettle whistled", "steam rose"),
];

/// Plausible (cause, effect) pairs; scene causal links are drawn from here.
pub const CAUSAL_PAIRS: &[(&str, &str)] = &[
    ("rain", "wet_ground"),
    ("wind", "door"),
    ("door", "cry"),
    ("alarm", "cry"),
    ("bell", "cheer"),
    ("music", "cheer"),
    ("dim", "music"),
    ("stall", "alarm"),
    ("kettle", "alarm"),
    ("wind", "dim"),
];

pub fn noun_index(noun: &str) -> Option<usize> {
    NOUNS.iter().position(|(s, _, _)| *s == noun)
}

pub fn plural(noun: &str) -> Option<&'static str> {
    NOUNS.iter().find(|(s, _, _)| *s == noun).map(|(_, p, _)| *p)
}

pub fn is_container(noun: &str) -> bool {
    NOUNS.iter().any(|(s, _, c)| *s == noun && *c)
}

pub fn size_rank(attr: &str) -> Option<usize> {
    SIZES.iter().position(|s| *s == attr)
}

pub fn event_index(event: &str) -> Option<usize> {
    EVENTS.iter().position(|(id, _, _)| *id == event)
}

/// Surface clause for an event in the earlier (cause) or later (effect) role.
pub fn event_clause(event: &str, earlier: bool) -> Option<&'static str> {
    EVENTS.iter().find(|(id, _, _)| *id == event).map(|&(_, e, l)| if earlier { e } else { l })
}

pub fn is_attribute(attr: &str) -> bool {
    SIZES.contains(&attr) || COLORS.contains(&attr)
}

/// Indefinite article for a singular noun.
pub fn article(noun: &str) -> &'static str {
    match noun.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}
