# Init file untuk package core
