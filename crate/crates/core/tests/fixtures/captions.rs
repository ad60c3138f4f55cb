use logicclip_core::LogicalCategory;
use LogicalCategory::*;

pub const EXAMPLES: [(&str, LogicalCategory); 9] = [
    ("Both the cat and the dog are in the house.", Conjunction),
    ("You can have either tea or coffee.", Disjunction),
    ("There are no apples in the basket.", Negation),
    ("Although it rained, we still went for a walk.", Contrast),
    ("The mountain is higher than the hill.", Comparison),
    ("If it rains, we will stay indoors.", Condition),
    ("The ground is wet because it rained.", Causality),
    ("We went for a walk after lunch.", Temporality),
    ("The package includes a book and a pen.", Inclusion),
];

/// Keywords hidden inside longer words. None of these has a real keyword.
pub const TRAPS: [&str; 24] = [
    "a sand castle on the beach",
    "I am sorry",
    "the candle is lit",
    "a brand new band",
    "the island nation",
    "the doorman waits",
    "an orange tractor",
    "a notebook on the desk",
    "the north gate",
    "a knotted rope",
    "a button on the shirt",
    "a butterfly lands",
    "the thankful man",
    "mostly cloudy skies",
    "the almost empty room",
    "a gift for her",
    "a difficult puzzle",
    "the sofa is red",
    "a reason to smile",
    "the sincerest thanks",
    "the rafters are high",
    "a heathen statue",
    "the hereafter",
    "meanwhile the crowd waits",
];
