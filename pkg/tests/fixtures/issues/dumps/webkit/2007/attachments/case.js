var obj = {};
var arr = [];
try { arr.sort(obj); assert(false); }
catch (e) { assert(e instanceof TypeError); }
