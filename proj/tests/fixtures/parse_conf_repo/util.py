import json


def parse_config(path):
    with open(path) as handle:
        return json.load(handle)


def write_config(path, data):
    with open(path, "w") as handle:
        json.dump(data, handle)
