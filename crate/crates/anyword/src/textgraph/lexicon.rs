//! Word lists backing the rule-based tagger. Coverage aims at referring
//! expressions: everyday objects, animals, clothing, food, scene furniture,
//! plus the closed-class function words that drive phrase chunking.

/// Determiners and quantifiers.
pub const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "both",
    "all", "no", "another", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "few", "several", "many", "most", "half",
];

/// Prepositions that attach the following noun phrase to the preceding
/// entity as a nested attribute (garments, carried items, materials).
pub const ATTRIBUTE_PREPOSITIONS: &[&str] = &["in", "with", "of", "wearing"];

/// Prepositions that introduce a spatially related, separate entity.
pub const SPATIAL_PREPOSITIONS: &[&str] = &[
    "on",
    "at",
    "by",
    "near",
    "beside",
    "under",
    "over",
    "behind",
    "above",
    "below",
    "between",
    "along",
    "around",
    "against",
    "across",
    "inside",
    "outside",
    "atop",
    "upon",
    "next",
    "beneath",
    "underneath",
    "among",
    "amid",
    "past",
    "beyond",
    "toward",
    "towards",
    "onto",
    "into",
    "from",
    "off",
    "to",
    "before",
    "after",
    "during",
    "through",
    "within",
    "without",
    "opposite",
    "alongside",
];

/// Pronouns, conjunctions, auxiliaries and other function words.
pub const FUNCTION_WORDS: &[&str] = &[
    "i",
    "you",
    "he",
    "she",
    "it",
    "we",
    "they",
    "him",
    "her",
    "them",
    "me",
    "us",
    "his",
    "hers",
    "its",
    "their",
    "theirs",
    "my",
    "mine",
    "your",
    "yours",
    "our",
    "ours",
    "who",
    "whom",
    "whose",
    "which",
    "what",
    "where",
    "when",
    "why",
    "how",
    "and",
    "or",
    "but",
    "nor",
    "so",
    "yet",
    "if",
    "because",
    "while",
    "although",
    "though",
    "than",
    "as",
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "am",
    "do",
    "does",
    "did",
    "has",
    "have",
    "had",
    "can",
    "could",
    "will",
    "would",
    "shall",
    "should",
    "may",
    "might",
    "must",
    "not",
    "there",
    "here",
    "also",
    "just",
    "only",
    "even",
    "still",
    "too",
    "very",
    "quite",
    "rather",
    "such",
    "itself",
    "himself",
    "herself",
    "themselves",
    "whats",
    "thats",
];

/// Adjectives: colors, sizes, shapes, materials, states, appearance.
pub const ADJECTIVES: &[&str] = &[
    // colors
    "red",
    "blue",
    "green",
    "yellow",
    "orange",
    "purple",
    "pink",
    "brown",
    "black",
    "white",
    "gray",
    "grey",
    "golden",
    "silver",
    "beige",
    "tan",
    "maroon",
    "navy",
    "teal",
    "turquoise",
    "violet",
    "magenta",
    "cyan",
    "crimson",
    "scarlet",
    "olive",
    "ivory",
    "blond",
    "blonde",
    "brunette",
    "colorful",
    "multicolored",
    "dark",
    "light",
    "bright",
    "pale",
    "vivid",
    // size and shape
    "big",
    "large",
    "small",
    "little",
    "tiny",
    "huge",
    "giant",
    "tall",
    "short",
    "long",
    "wide",
    "narrow",
    "thick",
    "thin",
    "round",
    "square",
    "oval",
    "flat",
    "curved",
    "straight",
    "deep",
    "shallow",
    "broad",
    "slim",
    "skinny",
    "chubby",
    "fat",
    "miniature",
    "oversized",
    // materials and texture
    "wooden",
    "metal",
    "metallic",
    "plastic",
    "glass",
    "leather",
    "ceramic",
    "stone",
    "brick",
    "concrete",
    "steel",
    "iron",
    "paper",
    "cloth",
    "woolen",
    "cotton",
    "silk",
    "denim",
    "furry",
    "fuzzy",
    "fluffy",
    "smooth",
    "rough",
    "soft",
    "hard",
    "shiny",
    "glossy",
    "matte",
    "rusty",
    "dusty",
    "muddy",
    "sandy",
    "wet",
    "dry",
    "frozen",
    "icy",
    "snowy",
    // age and condition
    "old",
    "young",
    "new",
    "ancient",
    "modern",
    "vintage",
    "antique",
    "fresh",
    "ripe",
    "rotten",
    "broken",
    "cracked",
    "torn",
    "worn",
    "clean",
    "dirty",
    "neat",
    "messy",
    "empty",
    "full",
    "open",
    "closed",
    "whole",
    "sliced",
    "chopped",
    "baked",
    "fried",
    "grilled",
    "roasted",
    "cooked",
    "raw",
    "cut",
    // appearance and quality
    "beautiful",
    "pretty",
    "ugly",
    "cute",
    "handsome",
    "elegant",
    "fancy",
    "plain",
    "simple",
    "ornate",
    "striped",
    "spotted",
    "checkered",
    "plaid",
    "floral",
    "patterned",
    "transparent",
    "opaque",
    "blurry",
    "sharp",
    "distant",
    "near",
    "left",
    "right",
    "upper",
    "lower",
    "middle",
    "front",
    "back",
    "center",
    "central",
    "top",
    "bottom",
    "far",
    "close",
    "first",
    "second",
    "third",
    "last",
    "happy",
    "sad",
    "angry",
    "calm",
    "busy",
    "quiet",
    "loud",
    "fast",
    "slow",
    "hot",
    "cold",
    "warm",
    "cool",
    "heavy",
    "lightweight",
    "bald",
    "bearded",
    "curly",
    "wavy",
    "leafy",
    "grassy",
    "rocky",
    "hilly",
    "cloudy",
    "sunny",
    "rainy",
    "foggy",
    "stormy",
    "windy",
    "other",
    "main",
    "single",
    "double",
    "triple",
    "several",
    "numerous",
    "lone",
    "solo",
];

/// Verbs common in referring expressions, base and inflected forms that the
/// suffix rules would otherwise miss.
pub const VERBS: &[&str] = &[
    "hold",
    "holds",
    "holding",
    "carry",
    "carries",
    "carrying",
    "wear",
    "wears",
    "eat",
    "eats",
    "eating",
    "drink",
    "drinks",
    "drinking",
    "run",
    "runs",
    "running",
    "walk",
    "walks",
    "walking",
    "jump",
    "jumps",
    "jumping",
    "sit",
    "sits",
    "sitting",
    "stand",
    "stands",
    "standing",
    "lie",
    "lies",
    "lying",
    "sleep",
    "sleeps",
    "sleeping",
    "play",
    "plays",
    "playing",
    "ride",
    "rides",
    "riding",
    "drive",
    "drives",
    "driving",
    "fly",
    "flies",
    "flying",
    "swim",
    "swims",
    "swimming",
    "climb",
    "climbs",
    "climbing",
    "throw",
    "throws",
    "throwing",
    "catch",
    "catches",
    "catching",
    "kick",
    "kicks",
    "kicking",
    "hit",
    "hits",
    "hitting",
    "pull",
    "pulls",
    "pulling",
    "push",
    "pushes",
    "pushing",
    "lift",
    "lifts",
    "lifting",
    "look",
    "looks",
    "looking",
    "watch",
    "watches",
    "watching",
    "read",
    "reads",
    "reading",
    "write",
    "writes",
    "writing",
    "talk",
    "talks",
    "talking",
    "speak",
    "speaks",
    "speaking",
    "smile",
    "smiles",
    "smiling",
    "laugh",
    "laughs",
    "laughing",
    "cry",
    "cries",
    "crying",
    "point",
    "points",
    "pointing",
    "reach",
    "reaches",
    "reaching",
    "touch",
    "touches",
    "touching",
    "grab",
    "grabs",
    "grabbing",
    "cook",
    "cooks",
    "cooking",
    "bake",
    "bakes",
    "baking",
    "wash",
    "washes",
    "washing",
    "feed",
    "feeds",
    "feeding",
    "chase",
    "chases",
    "chasing",
    "follow",
    "follows",
    "following",
    "lead",
    "leads",
    "leading",
    "jumping",
    "leaning",
    "leans",
    "lean",
    "hang",
    "hangs",
    "hanging",
    "float",
    "floats",
    "floating",
    "rest",
    "rests",
    "resting",
    "wait",
    "waits",
    "waiting",
    "stare",
    "stares",
    "staring",
    "gaze",
    "gazes",
    "gazing",
    "bend",
    "bends",
    "bending",
    "kneel",
    "kneels",
    "kneeling",
    "crouch",
    "crouches",
    "crouching",
    "stretch",
    "stretches",
    "stretching",
    "graze",
    "grazes",
    "grazing",
    "perch",
    "perches",
    "perching",
];

/// Adverbs not caught by the `-ly` suffix rule.
pub const ADVERBS: &[&str] = &[
    "fast",
    "well",
    "often",
    "never",
    "always",
    "sometimes",
    "again",
    "away",
    "almost",
    "already",
    "soon",
    "now",
    "then",
    "once",
    "twice",
    "together",
    "apart",
    "upward",
    "downward",
    "forward",
    "backward",
    "somewhere",
    "anywhere",
    "everywhere",
    "nowhere",
];

/// Nouns: people, animals, vehicles, household objects, clothing, food,
/// scene elements and parts. Includes plural forms that the singularizer
/// cannot derive.
pub const NOUNS: &[&str] = &[
    // people
    "person",
    "people",
    "man",
    "men",
    "woman",
    "women",
    "boy",
    "girl",
    "child",
    "children",
    "kid",
    "baby",
    "babies",
    "adult",
    "teenager",
    "guy",
    "lady",
    "gentleman",
    "player",
    "rider",
    "driver",
    "worker",
    "farmer",
    "chef",
    "cook",
    "waiter",
    "waitress",
    "doctor",
    "nurse",
    "teacher",
    "student",
    "officer",
    "police",
    "soldier",
    "athlete",
    "runner",
    "swimmer",
    "surfer",
    "skier",
    "skater",
    "batter",
    "pitcher",
    "catcher",
    "goalie",
    "cyclist",
    "pedestrian",
    "couple",
    "crowd",
    "family",
    "friend",
    "tourist",
    "vendor",
    "customer",
    "passenger",
    "pilot",
    "sailor",
    "fisherman",
    "hiker",
    "climber",
    "dancer",
    "singer",
    "musician",
    "artist",
    "painter",
    "photographer",
    "clown",
    "bride",
    "groom",
    // body parts
    "head",
    "face",
    "eye",
    "ear",
    "nose",
    "mouth",
    "hair",
    "beard",
    "mustache",
    "neck",
    "shoulder",
    "arm",
    "elbow",
    "hand",
    "finger",
    "thumb",
    "chest",
    "back",
    "waist",
    "leg",
    "knee",
    "foot",
    "feet",
    "toe",
    "tail",
    "paw",
    "wing",
    "beak",
    "horn",
    "mane",
    "fur",
    "whisker",
    "hoof",
    "claw",
    "fin",
    "snout",
    "trunk",
    "antler",
    // animals
    "animal",
    "dog",
    "puppy",
    "cat",
    "kitten",
    "feline",
    "tabby",
    "bird",
    "horse",
    "pony",
    "cow",
    "bull",
    "calf",
    "ox",
    "sheep",
    "lamb",
    "goat",
    "pig",
    "piglet",
    "chicken",
    "hen",
    "rooster",
    "duck",
    "goose",
    "geese",
    "turkey",
    "rabbit",
    "bunny",
    "mouse",
    "mice",
    "rat",
    "hamster",
    "squirrel",
    "fox",
    "wolf",
    "bear",
    "deer",
    "moose",
    "elk",
    "elephant",
    "lion",
    "tiger",
    "leopard",
    "cheetah",
    "giraffe",
    "zebra",
    "monkey",
    "ape",
    "gorilla",
    "panda",
    "koala",
    "kangaroo",
    "camel",
    "donkey",
    "mule",
    "seal",
    "whale",
    "dolphin",
    "shark",
    "fish",
    "salmon",
    "trout",
    "turtle",
    "tortoise",
    "frog",
    "toad",
    "snake",
    "lizard",
    "spider",
    "insect",
    "bee",
    "wasp",
    "butterfly",
    "moth",
    "ant",
    "beetle",
    "fly",
    "dragonfly",
    "eagle",
    "hawk",
    "owl",
    "crow",
    "raven",
    "pigeon",
    "dove",
    "sparrow",
    "robin",
    "seagull",
    "gull",
    "parrot",
    "flamingo",
    "penguin",
    "swan",
    "peacock",
    "ostrich",
    "crab",
    "lobster",
    "shrimp",
    "octopus",
    "jellyfish",
    "snail",
    "hound",
    "canine",
    "pup",
    "doggy",
    "kitty",
    // vehicles
    "car",
    "automobile",
    "vehicle",
    "auto",
    "truck",
    "lorry",
    "van",
    "bus",
    "minibus",
    "taxi",
    "cab",
    "jeep",
    "suv",
    "sedan",
    "coupe",
    "convertible",
    "limousine",
    "ambulance",
    "tractor",
    "trailer",
    "train",
    "locomotive",
    "tram",
    "subway",
    "bicycle",
    "bike",
    "tricycle",
    "motorcycle",
    "motorbike",
    "scooter",
    "skateboard",
    "surfboard",
    "snowboard",
    "sled",
    "sleigh",
    "boat",
    "ship",
    "canoe",
    "kayak",
    "yacht",
    "ferry",
    "sailboat",
    "raft",
    "airplane",
    "plane",
    "jet",
    "helicopter",
    "glider",
    "balloon",
    "rocket",
    "wagon",
    "cart",
    "carriage",
    "stroller",
    "wheelchair",
    "forklift",
    "bulldozer",
    "crane",
    "excavator",
    // clothing
    "clothes",
    "clothing",
    "shirt",
    "tshirt",
    "blouse",
    "sweater",
    "sweatshirt",
    "hoodie",
    "jacket",
    "coat",
    "raincoat",
    "overcoat",
    "vest",
    "suit",
    "tuxedo",
    "dress",
    "gown",
    "skirt",
    "pants",
    "trousers",
    "jeans",
    "shorts",
    "leggings",
    "sock",
    "socks",
    "shoe",
    "shoes",
    "boot",
    "boots",
    "sneaker",
    "sneakers",
    "sandal",
    "sandals",
    "slipper",
    "slippers",
    "heel",
    "heels",
    "hat",
    "cap",
    "beanie",
    "helmet",
    "hood",
    "scarf",
    "glove",
    "gloves",
    "mitten",
    "mittens",
    "belt",
    "tie",
    "bowtie",
    "collar",
    "button",
    "zipper",
    "pocket",
    "sleeve",
    "uniform",
    "jersey",
    "apron",
    "robe",
    "pajamas",
    "swimsuit",
    "bikini",
    "underwear",
    "bra",
    "glasses",
    "sunglasses",
    "goggles",
    "mask",
    "crown",
    "veil",
    "wig",
    "outfit",
    "garment",
    "costume",
    "jumper",
    "pullover",
    "cardigan",
    "parka",
    "poncho",
    // food
    "food",
    "meal",
    "breakfast",
    "lunch",
    "dinner",
    "snack",
    "dish",
    "apple",
    "banana",
    "orange",
    "lemon",
    "lime",
    "grape",
    "grapes",
    "berry",
    "berries",
    "strawberry",
    "blueberry",
    "raspberry",
    "cherry",
    "peach",
    "pear",
    "plum",
    "melon",
    "watermelon",
    "pineapple",
    "mango",
    "kiwi",
    "coconut",
    "avocado",
    "tomato",
    "potato",
    "carrot",
    "onion",
    "garlic",
    "pepper",
    "cucumber",
    "lettuce",
    "cabbage",
    "spinach",
    "broccoli",
    "cauliflower",
    "corn",
    "pea",
    "peas",
    "bean",
    "beans",
    "mushroom",
    "pumpkin",
    "squash",
    "zucchini",
    "eggplant",
    "radish",
    "celery",
    "bread",
    "toast",
    "bagel",
    "bun",
    "roll",
    "croissant",
    "muffin",
    "cake",
    "cupcake",
    "pie",
    "tart",
    "cookie",
    "biscuit",
    "brownie",
    "donut",
    "doughnut",
    "pastry",
    "pancake",
    "waffle",
    "pizza",
    "burger",
    "hamburger",
    "cheeseburger",
    "sandwich",
    "hotdog",
    "taco",
    "burrito",
    "pasta",
    "spaghetti",
    "noodle",
    "noodles",
    "rice",
    "soup",
    "stew",
    "salad",
    "cheese",
    "butter",
    "cream",
    "yogurt",
    "milk",
    "egg",
    "eggs",
    "bacon",
    "sausage",
    "ham",
    "steak",
    "meat",
    "beef",
    "pork",
    "lamb",
    "turkey",
    "tofu",
    "sauce",
    "ketchup",
    "mustard",
    "mayonnaise",
    "sugar",
    "salt",
    "flour",
    "chocolate",
    "candy",
    "jam",
    "honey",
    "syrup",
    "piece",
    "pieces",
    "slice",
    "slices",
    "chunk",
    "chunks",
    "crumb",
    "crumbs",
    "wedge",
    "loaf",
    "scoop",
    // drinks and containers
    "water",
    "juice",
    "soda",
    "coffee",
    "tea",
    "beer",
    "wine",
    "cocktail",
    "smoothie",
    "cup",
    "mug",
    "glass",
    "bottle",
    "can",
    "jar",
    "jug",
    "pitcher",
    "kettle",
    "pot",
    "pan",
    "skillet",
    "bowl",
    "plate",
    "saucer",
    "dish",
    "tray",
    "platter",
    "basket",
    "bucket",
    "barrel",
    "box",
    "crate",
    "carton",
    "bag",
    "sack",
    "pouch",
    "package",
    "container",
    "thermos",
    "flask",
    "straw",
    "napkin",
    "fork",
    "knife",
    "spoon",
    "chopstick",
    "chopsticks",
    "spatula",
    "ladle",
    "whisk",
    "grater",
    "peeler",
    "opener",
    "corkscrew",
    // furniture and household
    "furniture",
    "table",
    "desk",
    "chair",
    "armchair",
    "stool",
    "bench",
    "sofa",
    "couch",
    "bed",
    "mattress",
    "pillow",
    "cushion",
    "blanket",
    "quilt",
    "sheet",
    "curtain",
    "blind",
    "carpet",
    "rug",
    "mat",
    "shelf",
    "shelves",
    "bookshelf",
    "cabinet",
    "cupboard",
    "drawer",
    "dresser",
    "wardrobe",
    "closet",
    "mirror",
    "lamp",
    "lantern",
    "chandelier",
    "candle",
    "clock",
    "watch",
    "vase",
    "frame",
    "painting",
    "picture",
    "photograph",
    "photo",
    "poster",
    "sculpture",
    "statue",
    "ornament",
    "plant",
    "houseplant",
    "flowerpot",
    "pot",
    "television",
    "tv",
    "radio",
    "speaker",
    "computer",
    "laptop",
    "keyboard",
    "mouse",
    "monitor",
    "screen",
    "phone",
    "telephone",
    "smartphone",
    "tablet",
    "camera",
    "remote",
    "charger",
    "cable",
    "wire",
    "cord",
    "outlet",
    "switch",
    "fan",
    "heater",
    "stove",
    "oven",
    "microwave",
    "toaster",
    "blender",
    "mixer",
    "refrigerator",
    "fridge",
    "freezer",
    "dishwasher",
    "washer",
    "dryer",
    "vacuum",
    "iron",
    "sink",
    "faucet",
    "tap",
    "drain",
    "toilet",
    "bathtub",
    "tub",
    "shower",
    "towel",
    "soap",
    "shampoo",
    "toothbrush",
    "toothpaste",
    "razor",
    "comb",
    "brush",
    "broom",
    "mop",
    "dustpan",
    "trash",
    "garbage",
    "bin",
    "door",
    "doorway",
    "window",
    "windowsill",
    "wall",
    "ceiling",
    "floor",
    "stair",
    "stairs",
    "staircase",
    "railing",
    "banister",
    "ladder",
    "key",
    "lock",
    "handle",
    "knob",
    "hinge",
    "hook",
    "nail",
    "screw",
    "hammer",
    "wrench",
    "screwdriver",
    "drill",
    "saw",
    "pliers",
    "toolbox",
    "scissors",
    "tape",
    "glue",
    "string",
    "rope",
    "chain",
    "thread",
    "needle",
    "pin",
    "clip",
    "ruler",
    "pencil",
    "pen",
    "marker",
    "crayon",
    "eraser",
    "notebook",
    "book",
    "magazine",
    "newspaper",
    "letter",
    "envelope",
    "card",
    "ticket",
    "money",
    "coin",
    "wallet",
    "purse",
    "handbag",
    "backpack",
    "suitcase",
    "luggage",
    "umbrella",
    "cane",
    "crutch",
    // sports and toys
    "ball",
    "baseball",
    "basketball",
    "football",
    "soccer",
    "volleyball",
    "tennis",
    "golf",
    "bat",
    "racket",
    "racquet",
    "club",
    "stick",
    "puck",
    "frisbee",
    "kite",
    "toy",
    "doll",
    "teddy",
    "puzzle",
    "dice",
    "domino",
    "checker",
    "chess",
    "skate",
    "ski",
    "skis",
    "pole",
    "net",
    "goal",
    "hoop",
    "swing",
    "slide",
    "seesaw",
    "trampoline",
    "playground",
    // outdoor scene
    "tree",
    "bush",
    "shrub",
    "hedge",
    "grass",
    "lawn",
    "meadow",
    "field",
    "pasture",
    "farm",
    "barn",
    "stable",
    "fence",
    "gate",
    "wall",
    "path",
    "trail",
    "road",
    "street",
    "avenue",
    "highway",
    "sidewalk",
    "pavement",
    "curb",
    "crosswalk",
    "intersection",
    "corner",
    "bridge",
    "tunnel",
    "railway",
    "railroad",
    "track",
    "tracks",
    "station",
    "platform",
    "sign",
    "signpost",
    "signal",
    "stoplight",
    "streetlight",
    "lamppost",
    "pole",
    "pillar",
    "column",
    "post",
    "tower",
    "building",
    "house",
    "home",
    "cottage",
    "cabin",
    "hut",
    "shed",
    "garage",
    "apartment",
    "office",
    "shop",
    "store",
    "market",
    "mall",
    "restaurant",
    "cafe",
    "bakery",
    "hotel",
    "hospital",
    "school",
    "university",
    "library",
    "museum",
    "church",
    "temple",
    "mosque",
    "castle",
    "palace",
    "stadium",
    "arena",
    "theater",
    "cinema",
    "factory",
    "warehouse",
    "roof",
    "rooftop",
    "chimney",
    "balcony",
    "porch",
    "patio",
    "deck",
    "yard",
    "garden",
    "park",
    "forest",
    "wood",
    "woods",
    "jungle",
    "mountain",
    "hill",
    "cliff",
    "rock",
    "boulder",
    "stone",
    "pebble",
    "cave",
    "valley",
    "canyon",
    "desert",
    "dune",
    "beach",
    "shore",
    "coast",
    "island",
    "ocean",
    "sea",
    "lake",
    "pond",
    "river",
    "stream",
    "creek",
    "waterfall",
    "fountain",
    "pool",
    "puddle",
    "wave",
    "sky",
    "cloud",
    "sun",
    "moon",
    "star",
    "rainbow",
    "snow",
    "ice",
    "rain",
    "fog",
    "mist",
    "wind",
    "storm",
    "lightning",
    "fire",
    "flame",
    "smoke",
    "ash",
    "dirt",
    "soil",
    "mud",
    "sand",
    "gravel",
    "dust",
    "leaf",
    "leaves",
    "branch",
    "twig",
    "log",
    "stump",
    "root",
    "flower",
    "rose",
    "tulip",
    "daisy",
    "sunflower",
    "lily",
    "orchid",
    "petal",
    "stem",
    "seed",
    "fruit",
    "vegetable",
    "crop",
    "wheat",
    "hay",
    "straw",
    "vine",
    "cactus",
    "palm",
    "pine",
    "oak",
    "maple",
    "birch",
    "willow",
    // misc objects
    "wheel",
    "tire",
    "engine",
    "hood",
    "bumper",
    "windshield",
    "mirror",
    "headlight",
    "taillight",
    "license",
    "plate",
    "seat",
    "saddle",
    "handlebar",
    "pedal",
    "brake",
    "horn",
    "bell",
    "anchor",
    "sail",
    "mast",
    "oar",
    "paddle",
    "propeller",
    "cockpit",
    "runway",
    "flag",
    "banner",
    "ribbon",
    "balloon",
    "present",
    "gift",
    "candle",
    "cake",
    "confetti",
    "firework",
    "trophy",
    "medal",
    "badge",
    "crown",
    "jewel",
    "ring",
    "necklace",
    "bracelet",
    "earring",
    "pearl",
    "diamond",
    "instrument",
    "guitar",
    "violin",
    "piano",
    "drum",
    "trumpet",
    "flute",
    "saxophone",
    "microphone",
    "headphones",
    "bottle",
    "label",
    "barcode",
    "item",
    "object",
    "thing",
    "stuff",
    "group",
    "pair",
    "bunch",
    "stack",
    "pile",
    "row",
    "line",
    "circle",
    "square",
    "triangle",
    "rectangle",
    "shape",
    "shadow",
    "reflection",
    "silhouette",
    "edge",
    "border",
    "side",
    "end",
    "tip",
    "surface",
    "area",
    "region",
    "spot",
    "patch",
    "mark",
    "stain",
    "stripe",
    "dot",
    "pattern",
    "texture",
    "background",
    "foreground",
    "scene",
    "view",
    "landscape",
    "horizon",
    "distance",
    "middle",
    "top",
    "bottom",
    "front",
    "rear",
    "interior",
    "exterior",
    "one",
];

/// Default synonym table for the rule-based mutation backend. Keys are
/// lowercase singular nouns; values never repeat the key.
pub const SYNONYMS: &[(&str, &[&str])] = &[
    (
        "car",
        &["automobile", "vehicle", "auto", "sedan", "motorcar"],
    ),
    ("cat", &["kitten", "feline", "tabby", "kitty", "mouser"]),
    ("dog", &["puppy", "hound", "canine", "pup", "doggy"]),
    ("boy", &["lad", "youngster", "kid", "youth"]),
    ("girl", &["lass", "youngster", "kid", "maiden"]),
    ("man", &["gentleman", "guy", "fellow", "male"]),
    ("woman", &["lady", "female", "gal", "madam"]),
    ("child", &["kid", "youngster", "toddler", "minor"]),
    ("bird", &["fowl", "songbird", "avian"]),
    ("ball", &["sphere", "orb", "globe"]),
    ("cup", &["mug", "teacup", "tumbler", "goblet"]),
    ("bottle", &["flask", "vial", "container"]),
    ("house", &["home", "dwelling", "residence", "cottage"]),
    ("couch", &["sofa", "settee", "divan"]),
    ("sofa", &["couch", "settee", "divan"]),
    ("table", &["desk", "counter", "stand"]),
    ("tree", &["sapling", "conifer", "hardwood"]),
    ("rock", &["stone", "boulder", "pebble"]),
    ("road", &["street", "avenue", "lane", "roadway"]),
    ("bicycle", &["bike", "cycle", "twowheeler"]),
    ("bike", &["bicycle", "cycle", "twowheeler"]),
    ("horse", &["pony", "steed", "mare", "stallion"]),
    ("cow", &["bovine", "heifer", "cattle"]),
    ("bull", &["ox", "bovine", "steer"]),
    ("fence", &["railing", "barrier", "paling"]),
    ("donut", &["doughnut", "pastry", "cruller"]),
    ("apple", &["pippin", "fruit"]),
    ("lamp", &["light", "lantern", "fixture"]),
    ("fish", &["trout", "salmon", "minnow"]),
    ("tramcar", &["tram", "trolley", "streetcar"]),
    ("box", &["crate", "carton", "case"]),
];
