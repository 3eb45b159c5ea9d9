var _vrq = _vrq || [],
_vrqIsOnHP = (document.body.className ||
	'').search('pg-section') >=0 ? true : false;
_vrq.push(['id', 396]);
_vrq.push(['automate', _vrqIsOnHP]);
_vrq.push(['track', function() {}]);
