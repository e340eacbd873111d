total = (1 +
         2 +
         3)
other = total \
    * 2
