"""Writes the fixture corpus: train.xml (COPA format), test.jsonl (E-CARE
format) and responses.json, the scripted model output used to record
transcripts.jsonl.

    python3 make_fixtures.py
    ibe-eval generate --config record.toml
    ibe-eval evaluate --config record.toml

Each explanation is one of three shapes: a connected chain whose steps
reuse the previous clause, a hedged explanation with a gap in the chain,
or a single step that restates the hypothesis.
"""

import json
from xml.sax.saxutils import escape

INSTRUCTIONS_QUESTION = {
    "cause": "What was the cause of this?",
    "effect": "What happened as a result?",
}


def clause(text):
    text = text.strip().rstrip(".")
    return text[0].lower() + text[1:]


def chain(premise, mids, conclusion, assumptions, summary):
    nodes = [clause(premise)] + mids + [clause(conclusion)]
    return steps_text(list(zip(nodes, nodes[1:])), assumptions, summary)


def gap(premise, first, second_if, conclusion, assumptions, summary):
    pairs = [(clause(premise), first), (second_if, clause(conclusion))]
    return steps_text(pairs, assumptions, summary)


def restate(premise, conclusion, assumption, summary):
    return steps_text([(clause(premise), clause(conclusion))], [assumption], summary)


def steps_text(pairs, assumptions, summary):
    lines = []
    for i, ((a, b), assumption) in enumerate(zip(pairs, assumptions), start=1):
        lines.append(f"Step {i}: IF {a}, THEN {b}.")
        lines.append(f"Assumption: {assumption}")
    lines.append(f"Summary: {summary}")
    return "\n".join(lines)


def eev(item, i):
    cand = item["candidates"][i]
    if item["direction"] == "cause":
        return cand, item["context"]
    return item["context"], cand


# Each explanation is a function of (premise, conclusion).
TRAIN = [
    dict(
        context="The balloon popped.", direction="cause", gold=0,
        candidates=["The child poked it with a pin.", "The child tied a string to it."],
        explanations=[
            lambda p, c: chain(p, ["the pin made a hole in the balloon", "the air escaped through the hole"], c,
                               ["A sharp pin can puncture thin rubber.", "Air under pressure escapes through a hole.",
                                "A balloon bursts when its air escapes suddenly."],
                               "The pin punctured the balloon and the air escaped, so it popped."),
            lambda p, c: gap(p, "the string might pull on the balloon", "the balloon was perhaps weakened", c,
                             ["A string could possibly pull on a balloon.", "Weak rubber might burst."],
                             "The string may have weakened the balloon, which perhaps made it pop."),
        ],
    ),
    dict(
        context="It rained heavily all night.", direction="effect", gold=0,
        candidates=["The streets were flooded in the morning.", "The grass was dry in the morning."],
        explanations=[
            lambda p, c: chain(p, ["a lot of water collected on the ground"], c,
                               ["Heavy rain leaves water on the ground.", "Water that collects on the ground floods the streets."],
                               "The heavy rain left water on the ground, which flooded the streets."),
            lambda p, c: restate(p, c, "The grass was dry in the morning after it rained all night.",
                                 "It rained all night and the grass was dry in the morning."),
        ],
    ),
    dict(
        context="The ice cream melted.", direction="cause", gold=0,
        candidates=["It was left in the sun.", "It was put in the freezer."],
        explanations=[
            lambda p, c: chain(p, ["the sun heated the ice cream", "the ice cream became warm"], c,
                               ["Sunlight heats objects it shines on.", "Heated objects become warm.",
                                "Ice cream melts when it becomes warm."],
                               "The sun heated the ice cream until it was warm enough to melt."),
            lambda p, c: gap(p, "the freezer may have been broken", "the freezer perhaps lost power", c,
                             ["A freezer might possibly break.", "A freezer without power could warm up."],
                             "The freezer may have failed, so the ice cream possibly melted."),
        ],
    ),
    dict(
        context="The glass fell off the table.", direction="effect", gold=0,
        candidates=["It shattered on the floor.", "It floated in the air."],
        explanations=[
            lambda p, c: chain(p, ["the glass hit the floor hard"], c,
                               ["Falling objects hit the ground.", "Glass is fragile and breaks on impact."],
                               "The glass hit the floor hard and shattered."),
            lambda p, c: chain(p, ["a strong wind might have caught the glass"], c,
                               ["A gust of wind could perhaps lift a light object.",
                                "Objects caught by wind may possibly float."],
                               "A wind might have caught the glass, so it perhaps floated."),
        ],
    ),
    dict(
        context="The runner was thirsty.", direction="cause", gold=0,
        candidates=["She ran a marathon.", "She drank a bottle of water."],
        explanations=[
            lambda p, c: chain(p, ["her body lost water through sweat"], c,
                               ["Long exercise makes the body sweat.", "Losing water makes a person thirsty."],
                               "Running a marathon made her sweat out water, so she was thirsty."),
            lambda p, c: gap(p, "the water was possibly salty", "the moon was full", c,
                             ["Bottled water might contain salt.", "Salt may possibly cause thirst."],
                             "The water was perhaps salty, which might have made her thirsty."),
        ],
    ),
    dict(
        context="The student studied every night.", direction="effect", gold=0,
        candidates=["He passed the exam.", "He forgot his name."],
        explanations=[
            lambda p, c: chain(p, ["he learned the material well", "he answered the exam questions correctly"], c,
                               ["Regular study builds knowledge.", "Knowledge lets a student answer questions.",
                                "Correct answers earn a passing grade."],
                               "Studying every night taught him the material, so he answered correctly and passed."),
            lambda p, c: gap(p, "he perhaps got very tired", "extreme tiredness might cause memory problems", c,
                             ["Studying at night could possibly cause tiredness.",
                              "Severe fatigue may perhaps affect memory."],
                             "He might have been so tired that he possibly forgot his name."),
        ],
    ),
    dict(
        context="The dog barked loudly.", direction="cause", gold=0,
        candidates=["A stranger knocked on the door.", "The dog was asleep."],
        explanations=[
            lambda p, c: chain(p, ["the dog heard the knock"], c,
                               ["Dogs hear knocking at the door.", "Dogs bark at sounds made by strangers."],
                               "The dog heard the stranger knock and barked."),
            lambda p, c: restate(p, c, "The dog barked loudly while it was asleep.",
                                 "The dog was asleep and barked loudly."),
        ],
    ),
    dict(
        context="The farmer planted seeds in the spring.", direction="effect", gold=0,
        candidates=["Crops grew in the field.", "The field turned to rock."],
        explanations=[
            lambda p, c: chain(p, ["the seeds sprouted in the soil"], c,
                               ["Seeds sprout in spring soil.", "Sprouted seeds grow into crops."],
                               "The seeds sprouted in the soil and grew into crops."),
            lambda p, c: gap(p, "the soil might have been very poor", "a wizard cast a spell", c,
                             ["Some soil may possibly be poor.", "Hard soil might resemble rock."],
                             "The soil was perhaps poor and might have hardened like rock."),
        ],
    ),
    dict(
        context="The phone died.", direction="cause", gold=0,
        candidates=["Its battery ran out.", "It was fully charged."],
        explanations=[
            lambda p, c: restate(p, c, "The phone died when its battery ran out.",
                                 "The battery ran out and the phone died."),
            lambda p, c: gap(p, "the charger might have overheated the phone", "the phone possibly had a fault", c,
                             ["Charging could perhaps overheat a device.", "A faulty device may possibly shut down."],
                             "Charging might have damaged the phone, so it possibly died."),
        ],
    ),
    dict(
        context="The car skidded on the road.", direction="effect", gold=0,
        candidates=["The driver lost control.", "The road became dry."],
        explanations=[
            lambda p, c: chain(p, ["the tires lost grip on the road"], c,
                               ["A skidding car has no grip.", "Without grip a driver cannot steer."],
                               "The skid made the tires lose grip, so the driver lost control."),
            lambda p, c: chain(p, ["the tires perhaps heated the road"], c,
                               ["Friction might possibly warm a surface.", "A warm surface could perhaps dry."],
                               "The skid may have heated the road, which perhaps dried it."),
        ],
    ),
]

TEST = [
    dict(
        context="The tire went flat.", direction="cause", gold=0,
        candidates=["The car drove over a nail.", "The car was washed."],
        explanations=[
            lambda p, c: chain(p, ["the nail punctured the tire", "air leaked out of the tire"], c,
                               ["A nail is sharp enough to puncture rubber.", "Air leaks out through a puncture.",
                                "A tire without air goes flat."],
                               "The nail punctured the tire and the air leaked out, so it went flat."),
            lambda p, c: gap(p, "water might have gotten into the tire", "wet rubber could possibly weaken", c,
                             ["Water may perhaps enter a tire.", "Wet rubber might lose strength."],
                             "Washing might have let water in, which possibly flattened the tire."),
        ],
        judge="Explanation 1",
    ),
    dict(
        context="The water was heated on the stove.", direction="effect", gold=1,
        candidates=["The water froze.", "The water boiled."],
        explanations=[
            lambda p, c: gap(p, "the stove might have been broken", "cold air perhaps surrounded the pot", c,
                             ["A stove could possibly fail.", "Cold air may perhaps freeze water."],
                             "The stove might have failed and cold air possibly froze the water."),
            lambda p, c: chain(p, ["the temperature of the water rose"], c,
                               ["A hot stove raises the temperature of water.", "Water boils when it is hot enough."],
                               "The stove raised the temperature of the water until it boiled."),
        ],
        judge="Explanation 2",
    ),
    dict(
        context="The baby woke up crying.", direction="cause", gold=1,
        candidates=["The room was quiet.", "A loud noise disturbed the baby."],
        explanations=[
            lambda p, c: restate(p, c, "The baby woke up crying in the quiet room.",
                                 "The room was quiet and the baby woke up crying."),
            lambda p, c: chain(p, ["the noise interrupted the sleep of the baby"], c,
                               ["Loud sounds interrupt sleep.", "Babies cry when their sleep is interrupted."],
                               "The loud noise interrupted the baby's sleep, so the baby woke up crying."),
        ],
        judge="Explanation 1",
    ),
    dict(
        context="The lights went out in the house.", direction="effect", gold=0,
        candidates=["The rooms became dark.", "The rooms became warmer."],
        explanations=[
            lambda p, c: chain(p, ["no light reached the rooms"], c,
                               ["Lamps are the source of light in a house at night.", "A room without light is dark."],
                               "With the lights out no light reached the rooms, so they became dark."),
            lambda p, c: gap(p, "the heater might have turned on", "a heater perhaps warms a room", c,
                             ["A power cut could possibly switch on a heater.", "Heaters may warm rooms."],
                             "A heater might have come on, which possibly warmed the rooms."),
        ],
        judge="Explanation 1",
    ),
    dict(
        context="The plants wilted.", direction="cause", gold=0,
        candidates=["They were not watered for weeks.", "They were watered daily."],
        explanations=[
            lambda p, c: chain(p, ["the soil dried out", "the roots could not absorb water"], c,
                               ["Soil dries without watering.", "Roots need moist soil to absorb water.",
                                "Plants wilt without water."],
                               "Without water the soil dried out, the roots got no water and the plants wilted."),
            lambda p, c: gap(p, "the roots might have rotted from too much water", "rotten roots perhaps fail", c,
                             ["Too much water could possibly rot roots.", "Plants with failing roots may wilt."],
                             "Daily watering might have rotted the roots, so the plants possibly wilted."),
        ],
        judge="Explanation 2",
    ),
    dict(
        context="The boy kicked the ball hard.", direction="effect", gold=1,
        candidates=["The ball stayed still.", "The ball flew across the field."],
        explanations=[
            lambda p, c: restate(p, c, "The ball stayed still after the boy kicked the ball hard.",
                                 "The boy kicked the ball hard and the ball stayed still."),
            lambda p, c: chain(p, ["the kick put a large force on the ball"], c,
                               ["A hard kick applies force.", "A large force sends a ball flying."],
                               "The hard kick applied a large force, so the ball flew across the field."),
        ],
        judge="Explanation 2",
    ),
    dict(
        context="The river overflowed.", direction="cause", gold=1,
        candidates=["There was a long drought.", "A storm brought heavy rain."],
        explanations=[
            lambda p, c: gap(p, "the ground might have hardened", "hard ground could perhaps shed water", c,
                             ["Drought may possibly harden soil.", "Water might run off hard ground."],
                             "The drought might have hardened the ground, which possibly made the river overflow."),
            lambda p, c: chain(p, ["a lot of rain water flowed into the river"], c,
                               ["Heavy rain runs off into rivers.", "A river overflows when too much water flows in."],
                               "The storm's rain flowed into the river until it overflowed."),
        ],
        judge="Explanation 2",
    ),
    dict(
        context="The vase fell from the shelf.", direction="effect", gold=0,
        candidates=["It broke into pieces.", "It grew flowers."],
        explanations=[
            lambda p, c: chain(p, ["the vase hit the hard floor"], c,
                               ["Falling objects hit the floor.", "A fragile vase breaks on impact."],
                               "The vase hit the floor and broke into pieces."),
            lambda p, c: gap(p, "seeds might have been inside the vase", "an old legend says so", c,
                             ["A vase could possibly hold seeds.", "Seeds may grow into flowers."],
                             "Seeds in the vase might have sprouted into flowers."),
        ],
        judge="Both are fine.",
    ),
    dict(
        context="The student failed the test.", direction="cause", gold=0,
        candidates=["He did not prepare for it.", "He studied for weeks."],
        explanations=[
            lambda p, c: restate(p, c, "A student who did not prepare for the test failed the test.",
                                 "He did not prepare for the test, so the student failed the test."),
            lambda p, c: gap(p, "he might have studied the wrong topics", "the wrong topics perhaps appeared", c,
                             ["A student could possibly study the wrong material.",
                              "Unexpected questions may cause failure."],
                             "He might have studied the wrong topics, so he possibly failed."),
        ],
        judge="Explanation 1",
    ),
    dict(
        context="The man ran for an hour.", direction="effect", gold=0,
        candidates=["He felt tired.", "He felt rested."],
        explanations=[
            lambda p, c: chain(p, ["his muscles used a lot of energy"], c,
                               ["Running uses energy.", "Using a lot of energy makes a person tired."],
                               "Running for an hour used a lot of energy, so he felt tired."),
            lambda p, c: gap(p, "running might have relaxed him", "relaxation could perhaps feel like rest", c,
                             ["Exercise may possibly relax a person.", "Relaxed people might feel rested."],
                             "Running might have relaxed him so that he possibly felt rested."),
        ],
        judge="Explanation 1",
    ),
]


def explanation_needles(item, i):
    return [
        f"Context: {item['context']}\nQuestion: {INSTRUCTIONS_QUESTION[item['direction']]}\n"
        f"Answer candidate: {item['candidates'][i]}\n"
    ]


def main():
    script = []
    for item in TRAIN + TEST:
        for i, make in enumerate(item["explanations"]):
            premise, conclusion = eev(item, i)
            script.append({"match": explanation_needles(item, i), "response": make(premise, conclusion)})
        if "judge" in item:
            script.append({
                "match": ["Decide which explanation is more plausible", f"Context: {item['context']}\n"],
                "response": item["judge"],
            })
    with open("responses.json", "w") as f:
        json.dump(script, f, indent=1)
        f.write("\n")

    with open("train.xml", "w") as f:
        f.write('<?xml version="1.0" encoding="UTF-8"?>\n<copa-corpus version="1.0">\n')
        for n, item in enumerate(TRAIN, start=1):
            f.write(f'  <item id="{n}" asks-for="{item["direction"]}" most-plausible-alternative="{item["gold"] + 1}">\n')
            f.write(f'    <p>{escape(item["context"])}</p>\n')
            f.write(f'    <a1>{escape(item["candidates"][0])}</a1>\n')
            f.write(f'    <a2>{escape(item["candidates"][1])}</a2>\n')
            f.write("  </item>\n")
        f.write("</copa-corpus>\n")

    with open("test.jsonl", "w") as f:
        for n, item in enumerate(TEST, start=1):
            f.write(json.dumps({
                "index": f"dev-{n}",
                "premise": item["context"],
                "ask-for": item["direction"],
                "hypothesis1": item["candidates"][0],
                "hypothesis2": item["candidates"][1],
                "label": item["gold"],
            }) + "\n")


if __name__ == "__main__":
    main()
