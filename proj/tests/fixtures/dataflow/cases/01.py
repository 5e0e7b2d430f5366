a = Foo()
a.b