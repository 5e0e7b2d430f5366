a = Foo()
a = 1
a.b