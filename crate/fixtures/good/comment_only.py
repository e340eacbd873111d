# a file holding only comments
