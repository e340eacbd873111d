# nested loops with a comment line
for i in range(10):
    while i > 0:

        i = i - 1
        if i % 2 == 0: continue
    pass
