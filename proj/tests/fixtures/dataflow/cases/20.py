from lib import Client
a = Client('h')
b = a
c = b
d = c
e = d
e.send(