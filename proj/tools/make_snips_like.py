#!/usr/bin/env python3
"""Generate a small synthetic corpus in the Snips directory layout.

Each split directory holds seq.in (space-separated words), seq.out (one BIO
tag per word) and label (one intent per line). Output is fully determined by
--seed. The seven intents and slot names follow the public Snips benchmark so
the corpus exercises the same code paths; the utterances are templated.
"""

import argparse
import pathlib
import random

FILLERS = {
    "playlist": ["workout hits", "chill evening", "road trip", "indie mix", "morning coffee",
                 "rock classics", "sleep sounds", "party starters", "jazz lounge", "study beats"],
    "artist": ["adele", "miles davis", "the beatles", "taylor swift", "bob marley", "bjork",
               "johnny cash", "nina simone", "daft punk", "frank ocean"],
    "music_item": ["song", "track", "album", "tune"],
    "playlist_owner": ["my", "our"],
    "restaurant_type": ["restaurant", "bistro", "diner", "pub", "cafe"],
    "party_size_number": ["two", "three", "four", "5", "six", "8"],
    "city": ["paris", "boston", "tokyo", "berlin", "denver", "rome", "austin", "oslo"],
    "cuisine": ["italian", "thai", "mexican", "sushi", "indian", "greek"],
    "timeRange": ["tonight", "tomorrow", "at noon", "next friday", "this weekend", "at 7 pm"],
    "condition_description": ["rain", "snow", "sunny", "windy", "foggy"],
    "service": ["spotify", "deezer", "youtube", "pandora"],
    "genre": ["jazz", "pop", "blues", "techno", "folk"],
    "object_name": ["the hobbit", "dune", "moby dick", "the road", "emma", "ulysses",
                    "the odyssey", "neuromancer"],
    "rating_value": ["one", "two", "three", "four", "five", "3", "4"],
    "best_rating": ["five", "6", "ten"],
    "rating_unit": ["stars", "points"],
    "object_type": ["book", "novel", "game", "movie", "tv show", "soundtrack"],
    "movie_name": ["the matrix", "up", "jaws", "alien", "heat", "inception"],
    "location_name": ["cinema city", "the grand", "odeon", "regal plaza"],
    "object_location_type": ["movie theatre", "cinema"],
}

# Templates: literal words, or {slot} placeholders filled from FILLERS.
TEMPLATES = {
    "AddToPlaylist": [
        "add this {music_item} to {playlist_owner} {playlist} playlist",
        "add {artist} to {playlist_owner} {playlist} playlist",
        "put a {music_item} by {artist} on the {playlist} list",
        "please add {artist} to {playlist}",
    ],
    "BookRestaurant": [
        "book a table for {party_size_number} at a {restaurant_type} in {city}",
        "reserve a {cuisine} {restaurant_type} for {party_size_number} {timeRange}",
        "i need a table in {city} {timeRange}",
        "book a {restaurant_type} for {party_size_number} people",
    ],
    "GetWeather": [
        "what is the weather in {city} {timeRange}",
        "will it be {condition_description} in {city}",
        "is it going to {condition_description} {timeRange}",
        "forecast for {city} {timeRange}",
    ],
    "PlayMusic": [
        "play some {genre} on {service}",
        "play {artist} on {service}",
        "play the {music_item} by {artist}",
        "i want to hear {genre} music",
    ],
    "RateBook": [
        "rate {object_name} {rating_value} out of {best_rating}",
        "give this {object_type} {rating_value} {rating_unit}",
        "i rate {object_name} {rating_value} {rating_unit}",
        "rate the current {object_type} {rating_value} of {best_rating}",
    ],
    "SearchCreativeWork": [
        "find the {object_type} called {object_name}",
        "search for {object_name}",
        "where can i find the {object_type} {object_name}",
        "look up the {object_type} {movie_name}",
    ],
    "SearchScreeningEvent": [
        "find movie times for {movie_name} at {location_name}",
        "when is {movie_name} playing at the nearest {object_location_type}",
        "show me the schedule at {location_name} {timeRange}",
        "which {object_location_type} shows {movie_name} {timeRange}",
    ],
}


def render(template, rng):
    words, tags = [], []
    for piece in template.split():
        if piece.startswith("{") and piece.endswith("}"):
            slot = piece[1:-1]
            value = rng.choice(FILLERS[slot]).split()
            words.extend(value)
            tags.extend(["B-" + slot] + ["I-" + slot] * (len(value) - 1))
        else:
            words.append(piece)
            tags.append("O")
    return words, tags


def write_split(root, name, count, rng):
    intents = sorted(TEMPLATES)
    lines_in, lines_out, labels = [], [], []
    for i in range(count):
        intent = intents[i % len(intents)]
        words, tags = render(rng.choice(TEMPLATES[intent]), rng)
        lines_in.append(" ".join(words))
        lines_out.append(" ".join(tags))
        labels.append(intent)
    order = list(range(count))
    rng.shuffle(order)
    split_dir = root / name
    split_dir.mkdir(parents=True, exist_ok=True)
    for filename, lines in (("seq.in", lines_in), ("seq.out", lines_out), ("label", labels)):
        (split_dir / filename).write_text("".join(lines[j] + "\n" for j in order))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--train", type=int, default=32)
    parser.add_argument("--valid", type=int, default=16)
    parser.add_argument("--test", type=int, default=16)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    for name, count in (("train", args.train), ("valid", args.valid), ("test", args.test)):
        write_split(args.out_dir, name, count, rng)


if __name__ == "__main__":
    main()
