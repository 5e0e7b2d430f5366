from util import parse_config

cfg = parse_conf