#!/usr/bin/env python3
"""Writes the small clustered word-vector file shipped under data/embeddings.

Each word gets its cluster centroid plus seeded noise, so cosine similarity
is high inside a cluster and low across clusters. Replace the output with
any `token v1 ... vd` file (GloVe text format) for real use.
"""
import sys

import numpy as np

CLUSTERS = {
    "media": """public publicity publish publisher publishing press presenter presenters
        podcast pollster poller poll polls programme program producer paper pundit panel
        politics political broadcast broadcaster broadcasting bulletin ballot bias blog
        byline berman booth banner commentator commentary comment news newsroom network
        media reporter radio television viewer audience anchor headline journalist""",
    "drink": """brewery brew brewer brewing beer barley barrel bottle batch bitter
        pint pub porter pale pour malt hops tavern vat vintage vineyard flask ferment
        froth foam frothy cask cider wine glass drink tap""",
    "fun": """fun funny frolic festival feast fair fiddle folly fancy fantastic
        vivid vibrant venture vacation vivacious party play playful picnic parade
        balloon bounce bubbly joke jolly giggle game laugh laughter""",
    "sea": """sea seashore shore shell shells ship sailor sail salt salty surf
        shark seaweed sand splash swim swell sunny ocean wave tide beach boat
        harbor""",
    "sad": """sad sadness sorrow sorry sulk sigh solemn somber tears tearful
        gloom gloomy grief grieve mourn misery miserable melancholy lonely blue""",
    "language": """language languages linguist linguistic monolingual mandarin
        novel novelistic narrative noun nouns nonverbal non-direct direct method
        methods means meaning word words verb verbs grammar lexicon letter letters
        literal literary""",
    "country": """rural farm farmer field fields fence barn meadow pasture pony
        cattle cow crop harvest hay village valley country countryside cottage
        tractor orchard plough""",
    "food": """pepper peppers pickled pickle piper peck pie pastry bread butter
        bitter batter biscuit bacon bean beans cake cookie cheese chocolate
        chicken soup sauce sugar sweet""",
    "weather": """storm stormy thunder thunderous rain rainy wind windy weather
        cloud cloudy cold frost frosty fog foggy flood drizzle hail sleet snow
        sunshine""",
    "animals": """dog cat fox bear bird bee beetle bunny badger wolf woodchuck
        snail snake sheep goat mouse moose rabbit horse hound kitten puppy
        parrot penguin""",
    "wood": """wood woods wooden chuck chop timber tree trees twig log logs
        lumber forest branch bark axe carpenter""",
}

MODIFIERS = """public direct rural funny silver shiny sad bright brave busy calm
    clever cosy curious daring eager fancy gentle gloomy happy jolly lonely lucky
    merry noisy playful quiet rainy salty sleepy sunny sweet tiny vivid wild
    frosty stormy political literary sorrowful solemn wooden""".split()
NOUNS = """commentator language brewery ship festival fiddle farm pepper storm
    dog forest paper radio barrel harbor meadow village thunder rabbit parade
    picnic novel grammar pony cottage timber broadcast bulletin tavern vineyard
    ocean snail penguin orchard cookie""".split()


def main(out_dir):
    dim = 16
    rng = np.random.default_rng(20231016)
    centroids = {name: rng.normal(size=dim) for name in CLUSTERS}
    vectors = {}
    for name, words in CLUSTERS.items():
        for word in words.split():
            if word in vectors:
                continue
            vectors[word] = centroids[name] + 0.35 * rng.normal(size=dim)
    for word in MODIFIERS + NOUNS:
        if word not in vectors:
            vectors[word] = rng.normal(size=dim)
    with open(f"{out_dir}/embeddings/toy_vectors.txt", "w") as f:
        for word in sorted(vectors):
            f.write(word + " " + " ".join(f"{x:.6f}" for x in vectors[word]) + "\n")
    with open(f"{out_dir}/wordlists/modifiers.txt", "w") as f:
        f.write("\n".join(MODIFIERS) + "\n")
    with open(f"{out_dir}/wordlists/nouns.txt", "w") as f:
        f.write("\n".join(NOUNS) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
