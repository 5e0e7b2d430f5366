def parse_config(path):
    def inner(line):
        return line.strip()
    with open(path) as handle:
        return [inner(x) for x in handle]


async def fetch(url):
    return url


counter = 0
counter += 1
