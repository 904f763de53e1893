"""Regenerates toy_embeddings.txt.

Each word vector is stem + 0.6 * topic + 0.2 * noise, so inflections of one
stem are close, words sharing a topic are moderately close, and unrelated
words are near orthogonal. Function words get short vectors so they carry
little weight when predicate tokens are averaged.

    python3 gen_toy_embeddings.py > toy_embeddings.txt
"""

import numpy as np

DIM = 32
SEED = 20240131

TOPICS = {
    "puncture": [
        ["balloon", "balloons"], ["tire", "tires", "tyre"], ["air"], ["pressure"],
        ["deflate", "deflates", "deflated", "deflating"], ["flat"], ["pop", "pops", "popped"],
        ["puncture", "punctures", "punctured"], ["hole", "holes"], ["nail", "nails"],
        ["needle", "needles"], ["prick", "pricks", "pricked", "pricking"],
        ["leak", "leaks", "leaked", "leaking"], ["sharp"], ["rubber"], ["escape", "escapes", "escaped"],
        ["inflate", "inflated"], ["pin"], ["string"], ["tie", "tied"],
    ],
    "water": [
        ["water", "waters", "watered", "watering"], ["rain", "rains", "rained", "raining", "rainy"],
        ["wet", "wetter"], ["damp", "dampness"], ["moisture", "moist"], ["flood", "floods", "flooded", "flooding"],
        ["river", "rivers"], ["storm", "storms", "stormy"], ["umbrella", "umbrellas"], ["dry", "dried", "dries"],
        ["soak", "soaked"], ["drip", "dripping"], ["puddle", "puddles"], ["weather"], ["grass"],
        ["dew"], ["cloud", "clouds"], ["heavily"], ["overflow", "overflowed"], ["town", "streets"],
    ],
    "heat": [
        ["heat", "heated", "heats", "heating"], ["heater", "heaters"], ["warm", "warmer", "warmed", "warmth"],
        ["hot", "hotter"], ["temperature", "temperatures"], ["stove"], ["boil", "boils", "boiled", "boiling"],
        ["fire"], ["sun", "sunny", "sunlight", "shone", "shine"], ["melt", "melts", "melted", "melting"],
        ["cold", "colder"], ["ice", "icy"], ["freezer"], ["freeze", "frozen", "freezing"], ["cool", "cooled"],
        ["pot"], ["bubble", "bubbles"], ["steam"], ["room"], ["cream"],
    ],
    "breakage": [
        ["break", "breaks", "broke", "broken"], ["fall", "falls", "fell", "falling", "fallen"],
        ["shatter", "shatters", "shattered"], ["glass", "glasses"], ["crack", "cracked"], ["floor", "ground"],
        ["drop", "dropped"], ["fragile"], ["piece", "pieces"], ["table"], ["hit", "hits"], ["impact"],
        ["edge"], ["gravity"],
    ],
    "body": [
        ["thirst", "thirsty"], ["drink", "drinks", "drank", "drinking"], ["hydrate", "hydrated"],
        ["tired", "tiredness"], ["exhaust", "exhausted", "exhaustion"], ["run", "runs", "ran", "running"],
        ["runner", "runners"], ["marathon"], ["exercise"], ["muscle", "muscles"], ["rest", "rested"],
        ["energy"], ["sleep", "sleeps", "slept", "sleeping", "asleep"], ["body"], ["hours"], ["effort"],
    ],
    "learning": [
        ["study", "studies", "studied", "studying"], ["exam", "exams"], ["student", "students"],
        ["learn", "learned"], ["fail", "fails", "failed", "failure"], ["pass", "passed"],
        ["knowledge"], ["grade", "grades"], ["test", "tests"], ["prepare", "prepared", "preparation"],
        ["answer", "answers"], ["question", "questions"], ["night", "nights"],
    ],
    "sound": [
        ["sound", "sounds"], ["noise", "noises", "noisy"], ["bark", "barks", "barked", "barking"],
        ["dog", "dogs"], ["loud", "loudly"], ["wake", "wakes", "woke", "awake"], ["baby", "babies"],
        ["quiet", "quietly"], ["cry", "cries", "cried"], ["hear", "heard"], ["disturb", "disturbed"],
    ],
    "plants": [
        ["plant", "plants", "planted"], ["seed", "seeds"], ["grow", "grows", "grew", "growing", "growth"],
        ["crop", "crops"], ["farmer", "farmers"], ["soil"], ["wilt", "wilts", "wilted"], ["spring"],
        ["garden"], ["root", "roots"], ["flower", "flowers"], ["sprout", "sprouted"], ["leaf", "leaves"],
        ["rock", "rocks"], ["harvest"],
    ],
    "motion": [
        ["ball", "balls"], ["kick", "kicks", "kicked"], ["force"], ["move", "moves", "moved", "moving"],
        ["fly", "flies", "flew"], ["field"], ["motion"], ["speed", "fast"], ["hard"], ["still"],
        ["skid", "skidded"], ["car", "cars"], ["road", "roads"], ["slip", "slipped", "slippery"],
        ["driver"], ["across"],
    ],
    "power": [
        ["battery", "batteries"], ["phone", "phones"], ["charge", "charged", "charging"],
        ["power", "powered"], ["electricity", "electric"], ["light", "lights", "lit"], ["lamp", "lamps"],
        ["dark", "darkness"], ["line", "lines"], ["outage"], ["die", "died", "dead"], ["use", "used", "using"],
        ["device"], ["house"], ["knock", "knocked"], ["wire", "wires"],
    ],
    "cleaning": [
        ["dirt", "dirty"], ["soap"], ["wash", "washed", "washing"], ["clean", "cleaned"],
        ["hand", "hands"], ["paint", "painted", "painting"], ["mud", "muddy"], ["wall"], ["stain", "stains"],
    ],
    "spoilage": [
        ["mold", "moldy", "mould"], ["bread"], ["fungus", "fungi"], ["rot", "rotten"],
        ["spoil", "spoiled", "spoils"], ["fresh", "fresher"], ["milk"], ["sour"], ["bacteria"],
        ["overnight"], ["week", "weeks"], ["bake", "baked"], ["kept", "keep"], ["place"],
    ],
    "causation": [
        ["cause", "causes", "caused"], ["make", "makes", "made"], ["become", "becomes", "became"],
        ["happen", "happens", "happened"], ["result", "results", "resulted"], ["lead", "leads", "led"],
        ["turn", "turns", "turned"], ["begin", "began"], ["get", "got"], ["stay", "stayed"],
        ["lose", "loses", "lost"], ["feel", "felt"],
    ],
    "people": [
        ["man", "men"], ["woman", "women"], ["child", "children"], ["boy"], ["girl"], ["family"],
        ["person", "people"], ["someone", "nobody"],
    ],
}

FUNCTION_WORDS = (
    "the a an of to in on it is was were be been being has have had and or with for by at from "
    "this that these those he she they his her their its as then if so not no into out up down "
    "all any some very more less can will would may might could should must there here when while"
).split()


def main():
    rng = np.random.default_rng(SEED)
    rows = []
    for topic, stems in TOPICS.items():
        topic_vec = rng.normal(size=DIM)
        topic_vec /= np.linalg.norm(topic_vec)
        for forms in stems:
            stem_vec = rng.normal(size=DIM)
            stem_vec /= np.linalg.norm(stem_vec)
            for word in forms:
                noise = rng.normal(size=DIM)
                noise /= np.linalg.norm(noise)
                v = stem_vec + 0.6 * topic_vec + 0.2 * noise
                rows.append((word, v))
    for word in FUNCTION_WORDS:
        v = rng.normal(size=DIM)
        v = 0.05 * v / np.linalg.norm(v)
        rows.append((word, v))

    seen = set()
    print(f"d={DIM}")
    for word, v in rows:
        if word in seen:
            continue
        seen.add(word)
        print(word + " " + " ".join(f"{x:.6f}" for x in v))


if __name__ == "__main__":
    main()
